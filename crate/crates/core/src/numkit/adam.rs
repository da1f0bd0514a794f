use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{Parameters, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Decoupled decay: `lr * weight_decay * p` is subtracted after the
    /// moment update. Applies to every parameter, biases included.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 2e-5,
        }
    }
}

/// Adam moments for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            m: Vec::new(),
            v: Vec::new(),
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn second_moments(&self) -> impl Iterator<Item = &T> {
        self.v.iter().flatten()
    }

    /// One bias-corrected Adam update. Gradients are validated before any
    /// parameter is touched.
    pub fn step<P, G>(&mut self, params: &mut P, grads: &G, lr: f64) -> Result<()>
    where
        P: Parameters<T> + ?Sized,
        G: Parameters<T> + ?Sized,
    {
        if !(lr > 0.0) {
            return Err(Error::invalid(format!("learning rate must be positive, got {lr}")));
        }
        let gs = grads.param_slices();
        if gs.iter().flat_map(|s| s.iter()).any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("adam gradient"));
        }
        let mut ps = params.param_slices_mut();
        if ps.len() != gs.len() {
            return Err(Error::dims("adam parameter groups", ps.len(), gs.len()));
        }
        for (p, g) in ps.iter().zip(&gs) {
            if p.len() != g.len() {
                return Err(Error::dims("adam parameter group", p.len(), g.len()));
            }
        }
        if self.m.is_empty() {
            self.m = gs.iter().map(|g| vec![T::zero(); g.len()]).collect();
            self.v = self.m.clone();
        } else if self.m.len() != gs.len() || self.m.iter().zip(&gs).any(|(m, g)| m.len() != g.len()) {
            return Err(Error::invalid("adam state shaped for a different parameter set"));
        }

        self.t += 1;
        let c = &self.config;
        let b1 = T::lit(c.beta1);
        let b2 = T::lit(c.beta2);
        let eps = T::lit(c.epsilon);
        let lr_t = T::lit(lr);
        let decay = T::lit(lr * c.weight_decay);
        let bc1 = T::one() - b1.powi(self.t as i32);
        let bc2 = T::one() - b2.powi(self.t as i32);
        let one = T::one();

        for (k, (p, g)) in ps.iter_mut().zip(&gs).enumerate() {
            let m = &mut self.m[k];
            let v = &mut self.v[k];
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = b1 * m[i] + (one - b1) * gi;
                v[i] = b2 * v[i] + (one - b2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr_t * m_hat / (v_hat.sqrt() + eps) + decay * p[i];
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    struct Flat(Vec<f64>);

    impl Parameters<f64> for Flat {
        fn param_slices(&self) -> Vec<&[f64]> {
            vec![&self.0]
        }
        fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
            vec![&mut self.0]
        }
    }

    fn no_decay() -> AdamConfig {
        AdamConfig {
            weight_decay: 0.0,
            ..AdamConfig::default()
        }
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = Flat(vec![0.0]);
        let mut st = AdamState::new(no_decay());
        st.step(&mut p, &Flat(vec![1.0]), 1e-3).unwrap();
        // m_hat = 1, v_hat = 1: -lr / (1 + eps)
        assert_relative_eq!(p.0[0], -1e-3 / (1.0 + 1e-8), max_relative = 1e-15);
        assert_eq!(st.steps(), 1);
    }

    #[test]
    fn zero_gradient_without_decay_is_identity() {
        let mut p = Flat(vec![0.25, -3.0, 7.5]);
        let mut st = AdamState::new(no_decay());
        for _ in 0..5 {
            st.step(&mut p, &Flat(vec![0.0; 3]), 1e-2).unwrap();
        }
        assert_eq!(p.0, vec![0.25, -3.0, 7.5]);
        assert_eq!(st.steps(), 5);
    }

    #[test]
    fn decoupled_decay_shrinks_parameters() {
        let mut p = Flat(vec![2.0]);
        let mut st = AdamState::new(AdamConfig {
            weight_decay: 0.5,
            ..AdamConfig::default()
        });
        st.step(&mut p, &Flat(vec![0.0]), 0.1).unwrap();
        assert_relative_eq!(p.0[0], 2.0 - 0.1 * 0.5 * 2.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut p = Flat(vec![0.0]);
        let mut st = AdamState::new(no_decay());
        assert!(st.step(&mut p, &Flat(vec![f64::NAN]), 1e-3).is_err());
        assert!(st.step(&mut p, &Flat(vec![1.0]), 0.0).is_err());
        assert!(st.step(&mut p, &Flat(vec![1.0, 2.0]), 1e-3).is_err());
        assert_eq!(p.0[0], 0.0);
        assert_eq!(st.steps(), 0);
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let run = || {
            let mut p = Flat(vec![0.1, -0.2]);
            let mut st = AdamState::new(AdamConfig::default());
            for k in 0..50 {
                let g = Flat(vec![(k as f64).sin(), p.0[0] * 0.3]);
                st.step(&mut p, &g, 1e-2).unwrap();
            }
            p.0.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn second_moment_non_negative() {
        let mut p = Flat(vec![0.0; 4]);
        let mut st = AdamState::new(AdamConfig::default());
        for k in 0..20 {
            let g = Flat((0..4).map(|i| ((k * 4 + i) as f64).cos() * 3.0).collect());
            st.step(&mut p, &g, 1e-3).unwrap();
        }
        assert!(st.second_moments().all(|&v| v >= 0.0));
    }
}

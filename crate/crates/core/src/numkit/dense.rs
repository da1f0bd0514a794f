use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{init::glorot_uniform, Matrix, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply<T: Real>(self, x: T) -> T {
        match self {
            Activation::Relu => x.max(T::zero()),
            Activation::Identity => x,
        }
    }

    #[inline]
    fn derivative<T: Real>(self, pre: T) -> T {
        match self {
            Activation::Relu if pre > T::zero() => T::one(),
            Activation::Relu => T::zero(),
            Activation::Identity => T::one(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<T> {
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

impl<T: Real> DenseLayer<T> {
    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    /// `activation(W x + b)`; `x` must have length `in_dim`.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut z = self.weight.matvec(x);
        for (zi, &b) in z.iter_mut().zip(&self.bias) {
            *zi = self.activation.apply(*zi + b);
        }
        z
    }
}

/// Stack of fully-connected layers with hand-written backward pass.
///
/// `version` advances on every mutable parameter access so that a forward
/// cache taken before an optimizer step is recognised as stale.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet<T> {
    layers: Vec<DenseLayer<T>>,
    seed: u64,
    version: u64,
}

/// Activations recorded by [`DenseNet::forward`].
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    inputs: Vec<Vec<T>>,
    pre: Vec<Vec<T>>,
    version: u64,
    shape: Vec<(usize, usize)>,
}

/// Gradients shaped like the parameters of a [`DenseNet`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads<T> {
    pub layers: Vec<(Matrix<T>, Vec<T>)>,
}

/// Flat views of trainable parameters, in a fixed order.
pub trait Parameters<T> {
    fn param_slices(&self) -> Vec<&[T]>;
    fn param_slices_mut(&mut self) -> Vec<&mut [T]>;

    fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    fn flat_params(&self) -> Vec<T>
    where
        T: Copy,
    {
        self.param_slices().concat()
    }

    fn set_flat_params(&mut self, flat: &[T]) -> Result<()>
    where
        T: Copy,
    {
        let expected = self.param_count();
        if flat.len() != expected {
            return Err(Error::dims("flat parameter vector", expected, flat.len()));
        }
        let mut offset = 0;
        for s in self.param_slices_mut() {
            let n = s.len();
            s.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }
}

impl<T: Real> DenseNet<T> {
    pub fn new(layers: Vec<DenseLayer<T>>, seed: u64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("dense net needs at least one layer"));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.bias.len() != l.out_dim() {
                return Err(Error::dims("layer bias", l.out_dim(), l.bias.len()));
            }
            if k > 0 && layers[k - 1].out_dim() != l.in_dim() {
                return Err(Error::dims(
                    "layer chaining",
                    layers[k - 1].out_dim(),
                    l.in_dim(),
                ));
            }
            if !l.weight.all_finite() || l.bias.iter().any(|b| !b.is_finite()) {
                return Err(Error::NonFinite("dense layer parameters"));
            }
        }
        Ok(Self {
            layers,
            seed,
            version: 0,
        })
    }

    /// Glorot-uniform weights and zero biases. `dims` lists the width of every
    /// layer boundary, so `dims.len() == activations.len() + 1`.
    pub fn glorot(dims: &[usize], activations: &[Activation], seed: u64) -> Result<Self> {
        if dims.len() != activations.len() + 1 {
            return Err(Error::dims(
                "layer widths",
                activations.len() + 1,
                dims.len(),
            ));
        }
        let layers = dims
            .windows(2)
            .zip(activations)
            .enumerate()
            .map(|(k, (w, &activation))| {
                let layer_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64);
                Ok(DenseLayer {
                    weight: glorot_uniform(w[1], w[0], layer_seed)?,
                    bias: vec![T::zero(); w[1]],
                    activation,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers, seed)
    }

    /// Hidden ReLU layers followed by a linear output layer.
    pub fn mlp(dims: &[usize], seed: u64) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::invalid("mlp needs input and output widths"));
        }
        let mut acts = vec![Activation::Relu; dims.len() - 2];
        acts.push(Activation::Identity);
        Self::glorot(dims, &acts, seed)
    }

    pub fn layers(&self) -> &[DenseLayer<T>] {
        &self.layers
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.in_dim() {
            return Err(Error::dims("dense_forward input", self.in_dim(), x.len()));
        }
        Ok(())
    }

    /// Forward pass without recording a cache.
    pub fn infer(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_input(x)?;
        let mut h = x.to_vec();
        for l in &self.layers {
            h = l.apply(&h);
        }
        Ok(h)
    }

    /// Forward pass returning the output and the activations needed by
    /// [`DenseNet::backward`].
    pub fn forward(&self, x: &[T]) -> Result<(Vec<T>, ForwardCache<T>)> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        for l in &self.layers {
            let mut z = l.weight.matvec(&h);
            for (zi, &b) in z.iter_mut().zip(&l.bias) {
                *zi += b;
            }
            let a = z.iter().map(|&v| l.activation.apply(v)).collect();
            inputs.push(h);
            pre.push(z);
            h = a;
        }
        let cache = ForwardCache {
            inputs,
            pre,
            version: self.version,
            shape: self.shape(),
        };
        Ok((h, cache))
    }

    fn shape(&self) -> Vec<(usize, usize)> {
        self.layers
            .iter()
            .map(|l| (l.out_dim(), l.in_dim()))
            .collect()
    }

    /// Backward pass: accumulates parameter gradients into `grads` and returns
    /// the gradient with respect to the input.
    pub fn backward_into(
        &self,
        cache: &ForwardCache<T>,
        grad_out: &[T],
        grads: &mut DenseGrads<T>,
    ) -> Result<Vec<T>> {
        if cache.version != self.version || cache.shape != self.shape() {
            return Err(Error::invalid(
                "forward cache does not belong to this network state",
            ));
        }
        if grad_out.len() != self.out_dim() {
            return Err(Error::dims("dense_backward grad_out", self.out_dim(), grad_out.len()));
        }
        if grads.layers.len() != self.layers.len() {
            return Err(Error::dims("gradient buffer layers", self.layers.len(), grads.layers.len()));
        }
        let mut g = grad_out.to_vec();
        for (k, l) in self.layers.iter().enumerate().rev() {
            for (gi, &z) in g.iter_mut().zip(&cache.pre[k]) {
                *gi *= l.activation.derivative(z);
            }
            let (gw, gb) = &mut grads.layers[k];
            gw.add_outer(&g, &cache.inputs[k]);
            for (b, &gi) in gb.iter_mut().zip(&g) {
                *b += gi;
            }
            g = l.weight.matvec_t(&g);
        }
        Ok(g)
    }

    pub fn backward(&self, cache: &ForwardCache<T>, grad_out: &[T]) -> Result<(DenseGrads<T>, Vec<T>)> {
        let mut grads = DenseGrads::zeros_like(self);
        let grad_in = self.backward_into(cache, grad_out, &mut grads)?;
        Ok((grads, grad_in))
    }

    pub fn cast<U: Real>(&self) -> DenseNet<U> {
        DenseNet {
            layers: self
                .layers
                .iter()
                .map(|l| DenseLayer {
                    weight: l.weight.cast(),
                    bias: l.bias.iter().map(|&b| U::lit(b.as_f64())).collect(),
                    activation: l.activation,
                })
                .collect(),
            seed: self.seed,
            version: 0,
        }
    }
}

impl<T: Real> DenseGrads<T> {
    pub fn zeros_like(net: &DenseNet<T>) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| (Matrix::zeros(l.out_dim(), l.in_dim()), vec![T::zero(); l.out_dim()]))
                .collect(),
        }
    }

    pub fn scale(&mut self, s: T) {
        for (w, b) in &mut self.layers {
            w.as_mut_slice().iter_mut().for_each(|v| *v *= s);
            b.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn fill_zero(&mut self) {
        self.scale(T::zero());
    }
}

impl<T: Real> Parameters<T> for DenseNet<T> {
    fn param_slices(&self) -> Vec<&[T]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
            .collect()
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        self.version += 1;
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}

impl<T: Real> Parameters<T> for DenseGrads<T> {
    fn param_slices(&self) -> Vec<&[T]> {
        self.layers
            .iter()
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect()
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        self.layers
            .iter_mut()
            .flat_map(|(w, b)| [w.as_mut_slice(), b.as_mut_slice()])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::finite_diff_check;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single(weight: Matrix<f64>, activation: Activation) -> DenseNet<f64> {
        let out = weight.rows();
        DenseNet::new(
            vec![DenseLayer {
                weight,
                bias: vec![0.0; out],
                activation,
            }],
            0,
        )
        .unwrap()
    }

    #[test]
    fn identity_and_relu_forward() {
        let id = single(Matrix::identity(2), Activation::Identity);
        assert_eq!(id.infer(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
        let relu = single(Matrix::identity(2), Activation::Relu);
        assert_eq!(relu.forward(&[-1.0, 2.0]).unwrap().0, vec![0.0, 2.0]);
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let mut net = DenseNet::<f64>::mlp(&[3, 4, 2], 5).unwrap();
        for s in net.param_slices_mut() {
            s.fill(0.0);
        }
        assert_eq!(net.infer(&[0.3, -2.0, 9.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn dimension_errors_name_the_dims() {
        let net = DenseNet::<f64>::mlp(&[3, 2], 1).unwrap();
        let err = net.forward(&[1.0]).unwrap_err().to_string();
        assert!(err.contains("expected 3") && err.contains("got 1"), "{err}");
        let bad = vec![
            DenseLayer {
                weight: Matrix::<f64>::zeros(4, 3),
                bias: vec![0.0; 4],
                activation: Activation::Relu,
            },
            DenseLayer {
                weight: Matrix::zeros(2, 5),
                bias: vec![0.0; 2],
                activation: Activation::Identity,
            },
        ];
        assert!(DenseNet::new(bad, 0).is_err());
    }

    #[test]
    fn linear_gradient_is_outer_product() {
        let w = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![0.5, -1.0]]).unwrap();
        let net = single(w.clone(), Activation::Identity);
        let x = [0.7, -1.3];
        let (_, cache) = net.forward(&x).unwrap();
        let g = [1.0, -2.0, 0.5];
        let (grads, grad_in) = net.backward(&cache, &g).unwrap();
        let mut expected = Matrix::zeros(3, 2);
        expected.add_outer(&g, &x);
        assert_eq!(grads.layers[0].0, expected);
        assert_eq!(grads.layers[0].1, g.to_vec());
        assert_eq!(grad_in, w.matvec_t(&g));
    }

    #[test]
    fn relu_blocks_gradient_at_negative_preactivation() {
        let net = single(Matrix::identity(2), Activation::Relu);
        let (_, cache) = net.forward(&[-1.0, 2.0]).unwrap();
        let (grads, grad_in) = net.backward(&cache, &[1.0, 1.0]).unwrap();
        assert_eq!(grad_in, vec![0.0, 1.0]);
        assert_eq!(grads.layers[0].1, vec![0.0, 1.0]);
    }

    #[test]
    fn stale_cache_rejected() {
        let mut net = DenseNet::<f64>::mlp(&[2, 3, 1], 9).unwrap();
        let (_, cache) = net.forward(&[1.0, 1.0]).unwrap();
        net.param_slices_mut()[0][0] += 0.1;
        assert!(net.backward(&cache, &[1.0]).is_err());
        let other = DenseNet::<f64>::mlp(&[2, 4, 1], 9).unwrap();
        let (_, foreign) = other.forward(&[1.0, 1.0]).unwrap();
        let net = DenseNet::<f64>::mlp(&[2, 3, 1], 9).unwrap();
        assert!(net.backward(&foreign, &[1.0]).is_err());
    }

    /// Loss used by the finite-difference checks: `0.5 * ||net(x) - y||^2`.
    fn half_sq_loss(net: &DenseNet<f64>, x: &[f64], y: &[f64]) -> f64 {
        net.infer(x)
            .unwrap()
            .iter()
            .zip(y)
            .map(|(a, b)| 0.5 * (a - b) * (a - b))
            .sum()
    }

    #[test]
    fn backward_matches_finite_differences_on_random_nets() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut worst = 0.0_f64;
        for trial in 0..120 {
            let dims: Vec<usize> = (0..4).map(|_| rng.random_range(1..6)).collect();
            let mut net = DenseNet::<f64>::mlp(&dims, trial).unwrap();
            // non-zero biases so that ReLU kinks are not hit by symmetry
            for l in &mut net.param_slices_mut() {
                for v in l.iter_mut() {
                    *v += rng.random_range(-0.3..0.3);
                }
            }
            let x: Vec<f64> = (0..dims[0]).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..dims[3]).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (out, cache) = net.forward(&x).unwrap();
            let g: Vec<f64> = out.iter().zip(&y).map(|(a, b)| a - b).collect();
            let (grads, _) = net.backward(&cache, &g).unwrap();
            let params = net.flat_params();
            let mut probe = net.clone();
            let err = finite_diff_check(
                |p| {
                    probe.set_flat_params(p).unwrap();
                    half_sq_loss(&probe, &x, &y)
                },
                &params,
                &grads.flat_params(),
                1e-5,
            )
            .unwrap();
            worst = worst.max(err);
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn f32_instantiation_runs() {
        let net = DenseNet::<f32>::mlp(&[2, 3, 2], 4).unwrap();
        let (out, cache) = net.forward(&[0.5, -0.5]).unwrap();
        let (grads, _) = net.backward(&cache, &out).unwrap();
        assert_eq!(grads.param_count(), net.param_count());
    }
}

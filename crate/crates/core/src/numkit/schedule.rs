use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LrMode {
    Triangular2,
    Constant,
}

/// Cyclical learning rate. `step_size` is the number of batches in half a
/// cycle; `None` means "two epochs' worth", resolved by the trainer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrSchedule {
    pub base_lr: f64,
    pub max_lr: f64,
    pub step_size: Option<usize>,
    pub mode: LrMode,
}

impl Default for LrSchedule {
    fn default() -> Self {
        Self {
            base_lr: 1e-8,
            max_lr: 1e-2,
            step_size: None,
            mode: LrMode::Triangular2,
        }
    }
}

impl LrSchedule {
    pub fn with_step_size(mut self, step_size: usize) -> Self {
        self.step_size = Some(step_size);
        self
    }

    /// Step size, falling back to `2 * batches_per_epoch`.
    pub fn resolved_step_size(&self, batches_per_epoch: usize) -> usize {
        self.step_size.unwrap_or(2 * batches_per_epoch).max(1)
    }

    /// Learning rate at a global batch index. `Constant` mode returns `max_lr`.
    pub fn lr(&self, batch_index: usize, batches_per_epoch: usize) -> f64 {
        match self.mode {
            LrMode::Constant => self.max_lr,
            LrMode::Triangular2 => cyclical_lr(
                self.base_lr,
                self.max_lr,
                self.resolved_step_size(batches_per_epoch),
                batch_index,
            ),
        }
    }
}

/// Triangular wave from `base_lr` up to `max_lr` and back, with the peak
/// amplitude halved after every full cycle.
pub fn cyclical_lr(base_lr: f64, max_lr: f64, step_size: usize, batch_index: usize) -> f64 {
    let step = step_size.max(1);
    let cycle = 1 + batch_index / (2 * step);
    let pos = batch_index % (2 * step);
    // distance from the peak, in half-cycle units, computed on integers so
    // that cycle boundaries land exactly on base_lr
    let dist = pos.abs_diff(step) as f64 / step as f64;
    let scale = 0.5_f64.powi((cycle - 1).min(1074) as i32);
    let lr = base_lr + (max_lr - base_lr) * (1.0 - dist).max(0.0) * scale;
    lr.clamp(base_lr.min(max_lr), max_lr.max(base_lr))
}

//! CTC machinery: symbol table, log-space loss and gradient, brute-force
//! path enumeration, greedy best-path decoding and the frame-wise acoustic
//! model trainer.

mod brute;
mod decode;
mod loss;
mod model;
mod symbols;

pub use brute::{ctc_bruteforce, MAX_PATHS};
pub use decode::{best_path, collapse, greedy_decode};
pub use loss::{ctc_backward_grad, ctc_forward_loss, ctc_posteriors, is_feasible, required_frames};
pub use model::{train_ctc, CtcEpoch, CtcModel, CtcTrainConfig, CtcTrainOutcome};
pub use symbols::{normalize_text, SymbolTable, BLANK, DEFAULT_ALPHABET};

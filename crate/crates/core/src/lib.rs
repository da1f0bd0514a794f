//! Accent identification and accentedness assessment toolkit.
//!
//! The numeric core ([`numkit`]) and the CTC machinery ([`ctc`]) are generic
//! over the scalar type through [`Real`]; the pipelines that touch files run
//! in `f64` and store `f32`. Concrete aliases for the common instantiations
//! live at the crate root.

pub mod aid;
pub mod archive;
pub mod assess;
pub mod cli;
pub mod corpus;
pub mod ctc;
pub mod curriculum;
pub mod error;
pub mod numkit;

pub use error::{Error, Result};
pub use numkit::{Matrix, Real};

/// Double-precision dense matrix, the working type of every pipeline.
pub type Mat = numkit::Matrix<f64>;
/// Single-precision dense matrix, matching the on-disk storage precision.
pub type MatF32 = numkit::Matrix<f32>;
pub type Net = numkit::DenseNet<f64>;
pub type NetF32 = numkit::DenseNet<f32>;
pub type Encoder = aid::FrameEncoder<f64>;
pub type Fusion = aid::FusionModel<f64>;
pub type CtcNet = ctc::CtcModel<f64>;

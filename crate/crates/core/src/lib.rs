//! Saliency prediction learned as a by-product of image classification.
//!
//! The crate is organised around five pieces:
//!
//! - [`tensor`]: a small dense f64 tensor engine with reverse-mode gradients,
//!   just large enough to train the two-branch network.
//! - [`net`]: the two-branch classifier (RGB branch, saliency branch,
//!   modulation layer, shared head) and its two-phase training loop.
//! - [`priors`]: circular/ellipsoid Gaussian center-bias maps, empirical
//!   split-based center bias, and saliency/prior fusion.
//! - [`metrics`]: the fixation-prediction metric suite (AUC-Judd, AUC-Borji,
//!   shuffled AUC, NSS, CC, KL, SIM) with report serialization.
//! - [`data`]: manifest ingestion, netpbm/PNG image IO, fixation CSVs,
//!   fixation-density smoothing, and a synthetic pop-out stimulus generator.

pub mod data;
pub mod map;
pub mod metrics;
pub mod net;
pub mod priors;
pub mod tensor;

pub use map::SaliencyMap;
pub use tensor::{Tensor, TensorError};

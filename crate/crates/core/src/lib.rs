//! Online multi-kernel least-squares regression.
//!
//! The pieces, bottom up:
//!
//! - [`rff`] — Gaussian/Laplacian kernels, their spectral samplers, and
//!   random Fourier feature maps over a kernel dictionary.
//! - [`vaw`] — the Vovk-Azoury-Warmuth online ridge forecaster with
//!   Sherman-Morrison inverse maintenance, plus its regret bound as a
//!   computable function.
//! - [`meta`] — second-level combiners of expert predictions: exponential
//!   weighting, the aggregating forecaster, and truncation.
//! - [`pipeline`] — the two-level models (per-kernel VAW experts under a
//!   VAW/EWA/Aggregating meta) and the concatenated-feature single VAW.
//! - [`data`] — dataset loading, normalization, the AR(4) stream, and seed
//!   derivation.

pub mod data;
pub mod error;
pub mod meta;
pub mod pipeline;
pub mod rff;
pub mod vaw;

pub use error::{Error, Result};

//! Uncertainty-conditioned prediction intervals for multivariate
//! time-series forecasts.
//!
//! The pipeline turns feature-wise reconstruction errors of a forecaster's
//! autoencoder into per-instance interval widths. Two conditioned methods
//! (Gaussian copula and k-nearest-neighbour quantiles) are provided next to
//! split and normalized conformal prediction baselines, together with the
//! interval-quality and uncertainty-quality metric suites used to compare
//! them.

pub mod conformal;
pub mod copula;
pub mod dataio;
pub mod error;
pub mod interval;
pub mod knn;
pub mod metrics;
pub mod neural;
pub mod statcore;

pub use error::{Error, Result};
pub use interval::IntervalBatch;
pub use neural::CalibrationErrors;

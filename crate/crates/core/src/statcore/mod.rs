//! Statistical primitives shared by every interval method: empirical CDFs
//! with nearest-rank inverse, the standard normal CDF and quantile,
//! multivariate Gaussian fitting and conditioning, and Pearson correlation.

mod corr;
mod ecdf;
mod gaussian;
mod normal;

pub use corr::{pearson, spearman};
pub use ecdf::EmpiricalCdf;
pub use gaussian::{ConditionalSolver, MultivariateGaussian};
pub use normal::{norm_cdf, norm_quantile};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::interval::IntervalBatch;

pub const DEFAULT_RHO_W: f64 = 1.0;
pub const DEFAULT_BETA: f64 = 1000.0;

/// Proportion of true values inside the interval, inclusive bounds,
/// per output column.
pub fn picp(y: &DMatrix<f64>, intervals: &IntervalBatch) -> Result<Vec<f64>> {
    check_shapes(y, intervals)?;
    if y.nrows() == 0 {
        return Err(Error::InsufficientData("PICP over zero instances".into()));
    }
    Ok((0..y.ncols())
        .map(|j| {
            let covered = (0..y.nrows())
                .filter(|&i| {
                    y[(i, j)] >= intervals.lower[(i, j)] && y[(i, j)] <= intervals.upper[(i, j)]
                })
                .count();
            covered as f64 / y.nrows() as f64
        })
        .collect())
}

/// Squared deviation of PICP from the margin-adjusted target coverage.
pub fn covp(picp_value: f64, alpha: f64, delta: f64) -> f64 {
    (1.0 - alpha + delta - picp_value).powi(2)
}

/// Default coverage margin.
pub fn default_delta(alpha: f64) -> f64 {
    alpha / 50.0
}

/// Mean interval width normalized by the output range, per output.
pub fn pinaw(intervals: &IntervalBatch, range: &[f64]) -> Result<Vec<f64>> {
    if range.len() != intervals.n_outputs() {
        return Err(Error::Dimension(format!(
            "{} ranges for {} outputs",
            range.len(),
            intervals.n_outputs()
        )));
    }
    if let Some(bad) = range.iter().find(|&&r| r <= 0.0) {
        return Err(Error::Config(format!("output range must be positive, got {bad}")));
    }
    let n = intervals.n_instances();
    if n == 0 {
        return Err(Error::InsufficientData("PINAW over zero instances".into()));
    }
    Ok((0..intervals.n_outputs())
        .map(|j| {
            let total: f64 = (0..n).map(|i| intervals.width(i, j)).sum();
            total / (n as f64 * range[j])
        })
        .collect())
}

/// Mean normalized distance of uncovered points to the nearer bound,
/// per output; zero when every point is covered.
pub fn pinafd(y: &DMatrix<f64>, intervals: &IntervalBatch, range: &[f64]) -> Result<Vec<f64>> {
    check_shapes(y, intervals)?;
    if range.len() != intervals.n_outputs() {
        return Err(Error::Dimension(format!(
            "{} ranges for {} outputs",
            range.len(),
            intervals.n_outputs()
        )));
    }
    if let Some(bad) = range.iter().find(|&&r| r <= 0.0) {
        return Err(Error::Config(format!("output range must be positive, got {bad}")));
    }
    Ok((0..y.ncols())
        .map(|j| {
            let mut total = 0.0;
            let mut outliers = 0usize;
            for i in 0..y.nrows() {
                let (v, lo, hi) = (y[(i, j)], intervals.lower[(i, j)], intervals.upper[(i, j)]);
                if v < lo || v > hi {
                    total += (v - hi).abs().min((lo - v).abs());
                    outliers += 1;
                }
            }
            if outliers == 0 {
                0.0
            } else {
                total / (range[j] * outliers as f64)
            }
        })
        .collect())
}

/// Composite interval quality: PINAW + rho_w * PINAFD + beta * CovP.
pub fn cwfdc(pinaw: f64, pinafd: f64, covp: f64, rho_w: f64, beta: f64) -> f64 {
    pinaw + rho_w * pinafd + beta * covp
}

fn check_shapes(y: &DMatrix<f64>, intervals: &IntervalBatch) -> Result<()> {
    if y.nrows() != intervals.n_instances() || y.ncols() != intervals.n_outputs() {
        return Err(Error::Dimension(format!(
            "targets {:?} vs intervals {}x{}",
            y.shape(),
            intervals.n_instances(),
            intervals.n_outputs()
        )));
    }
    Ok(())
}

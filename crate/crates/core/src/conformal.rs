//! Split conformal prediction and normalized conformal prediction, the
//! uniform-width and scalar-uncertainty baselines the conditioned methods
//! are compared against.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{IntervalBatch, PiMethod};

/// The ceil((m+1)(1-alpha))-th smallest score. Returns +inf when the rank
/// exceeds m, signalling insufficient calibration data for the target
/// coverage.
pub fn adjusted_quantile(scores: &[f64], alpha: f64) -> Result<f64> {
    let m = scores.len();
    if m == 0 {
        return Err(Error::InsufficientData("empty score vector".into()));
    }
    let rank = ((m + 1) as f64 * (1.0 - alpha)).ceil() as usize;
    if rank > m {
        return Ok(f64::INFINITY);
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(sorted[rank.max(1) - 1])
}

/// Per-output adjusted-quantile widths from calibration errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitCpCalibration {
    pub q_hat: Vec<f64>,
    pub alpha: f64,
    pub n_cal: usize,
}

impl SplitCpCalibration {
    pub fn fit(errors: &DMatrix<f64>, alpha: f64) -> Result<Self> {
        let n = errors.nrows();
        if n == 0 {
            return Err(Error::InsufficientData("no calibration errors".into()));
        }
        let q_hat = (0..errors.ncols())
            .map(|j| {
                let col: Vec<f64> = errors.column(j).iter().copied().collect();
                adjusted_quantile(&col, alpha)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            q_hat,
            alpha,
            n_cal: n,
        })
    }

    pub fn intervals(&self, predictions: &DMatrix<f64>) -> Result<IntervalBatch> {
        if predictions.ncols() != self.q_hat.len() {
            return Err(Error::Dimension(format!(
                "predictions have {} outputs, calibration has {}",
                predictions.ncols(),
                self.q_hat.len()
            )));
        }
        let half = DMatrix::from_fn(predictions.nrows(), predictions.ncols(), |_, j| {
            self.q_hat[j]
        });
        IntervalBatch::symmetric(predictions, &half, self.alpha, PiMethod::SplitCp)
    }
}

/// Normalized CP: scores are errors divided by a per-instance scalar
/// uncertainty, widths scale back by the query's uncertainty.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizedCpCalibration {
    pub q_hat: Vec<f64>,
    pub alpha: f64,
    pub n_cal: usize,
}

impl NormalizedCpCalibration {
    pub fn fit(errors: &DMatrix<f64>, sigma: &[f64], alpha: f64) -> Result<Self> {
        let n = errors.nrows();
        if sigma.len() != n {
            return Err(Error::Dimension(format!(
                "{} sigma values for {} calibration rows",
                sigma.len(),
                n
            )));
        }
        if let Some(bad) = sigma.iter().find(|&&s| s <= 0.0) {
            return Err(Error::Numeric(format!(
                "normalized CP requires sigma > 0, got {bad}"
            )));
        }
        let q_hat = (0..errors.ncols())
            .map(|j| {
                let scores: Vec<f64> = errors
                    .column(j)
                    .iter()
                    .zip(sigma)
                    .map(|(e, s)| e / s)
                    .collect();
                adjusted_quantile(&scores, alpha)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            q_hat,
            alpha,
            n_cal: n,
        })
    }

    pub fn intervals(&self, predictions: &DMatrix<f64>, sigma: &[f64]) -> Result<IntervalBatch> {
        if predictions.ncols() != self.q_hat.len() {
            return Err(Error::Dimension(format!(
                "predictions have {} outputs, calibration has {}",
                predictions.ncols(),
                self.q_hat.len()
            )));
        }
        if sigma.len() != predictions.nrows() {
            return Err(Error::Dimension(format!(
                "{} sigma values for {} prediction rows",
                sigma.len(),
                predictions.nrows()
            )));
        }
        if let Some(bad) = sigma.iter().find(|&&s| s <= 0.0) {
            return Err(Error::Numeric(format!("sigma must be positive, got {bad}")));
        }
        let half = DMatrix::from_fn(predictions.nrows(), predictions.ncols(), |i, j| {
            self.q_hat[j] * sigma[i]
        });
        IntervalBatch::symmetric(predictions, &half, self.alpha, PiMethod::NormalizedCp)
    }
}

/// On-disk form of either CP calibration (`calibration.json`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CpCalibrationFile {
    pub method: PiMethod,
    pub alpha: f64,
    pub q_hat: Vec<f64>,
    pub n_cal: usize,
}

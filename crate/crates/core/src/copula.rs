//! Gaussian-copula prediction intervals: per-column normal-score
//! transforms of reconstruction and prediction errors, one joint Gaussian
//! over the transformed blocks, and per-instance conditional quantiles
//! mapped back to error units.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{IntervalBatch, PiMethod};
use crate::neural::CalibrationErrors;
use crate::statcore::{
    norm_cdf, norm_quantile, ConditionalSolver, EmpiricalCdf, MultivariateGaussian,
};

pub const DEFAULT_RIDGE: f64 = 1e-6;

/// Fitted copula state. Ordering convention: the transformed joint stacks
/// the rho block (I columns) first, then the error block (O columns).
#[derive(Debug, Clone)]
pub struct CopulaCalibration {
    rho_cdfs: Vec<EmpiricalCdf>,
    err_cdfs: Vec<EmpiricalCdf>,
    joint: MultivariateGaussian,
    solver: ConditionalSolver,
    alpha: f64,
    /// Phi^-1(1 - alpha), fixed at calibration time.
    z_target: f64,
}

impl CopulaCalibration {
    pub fn fit(cal: &CalibrationErrors, alpha: f64, ridge: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("alpha must be in (0,1), got {alpha}")));
        }
        let n = cal.n_rows();
        if n < 2 {
            return Err(Error::InsufficientData(format!(
                "copula calibration needs at least 2 rows, got {n}"
            )));
        }
        let n_rho = cal.rho.ncols();
        let n_err = cal.err.ncols();

        let fit_cols = |m: &DMatrix<f64>| -> Result<Vec<EmpiricalCdf>> {
            (0..m.ncols())
                .map(|j| {
                    let col: Vec<f64> = m.column(j).iter().copied().collect();
                    EmpiricalCdf::fit(&col)
                })
                .collect()
        };
        let rho_cdfs = fit_cols(&cal.rho)?;
        let err_cdfs = fit_cols(&cal.err)?;

        let mut transformed = DMatrix::zeros(n, n_rho + n_err);
        for j in 0..n_rho {
            for i in 0..n {
                transformed[(i, j)] = norm_quantile(rho_cdfs[j].eval(cal.rho[(i, j)]))?;
            }
        }
        for j in 0..n_err {
            for i in 0..n {
                transformed[(i, n_rho + j)] = norm_quantile(err_cdfs[j].eval(cal.err[(i, j)]))?;
            }
        }

        let joint = MultivariateGaussian::fit(&transformed, ridge)?;
        let observed: Vec<usize> = (0..n_rho).collect();
        let solver = ConditionalSolver::new(&joint, &observed)?;
        let z_target = norm_quantile(1.0 - alpha)?;
        Ok(Self {
            rho_cdfs,
            err_cdfs,
            joint,
            solver,
            alpha,
            z_target,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn joint(&self) -> &MultivariateGaussian {
        &self.joint
    }

    pub fn n_features(&self) -> usize {
        self.rho_cdfs.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.err_cdfs.len()
    }

    fn transform_rho(&self, rho_row: &[f64]) -> Result<Vec<f64>> {
        if rho_row.len() != self.rho_cdfs.len() {
            return Err(Error::Dimension(format!(
                "rho row length {} vs {} fitted features",
                rho_row.len(),
                self.rho_cdfs.len()
            )));
        }
        rho_row
            .iter()
            .zip(&self.rho_cdfs)
            .map(|(&v, cdf)| norm_quantile(cdf.eval(v)))
            .collect()
    }

    /// Per-output half-width for one instance's feature-wise reconstruction
    /// errors.
    pub fn interval_width(&self, rho_row: &[f64]) -> Result<Vec<f64>> {
        let rho_star = self.transform_rho(rho_row)?;
        let mu = self.solver.conditional_mean(&rho_star)?;
        let cov = self.solver.conditional_cov();
        (0..self.err_cdfs.len())
            .map(|j| {
                let sd = cov[(j, j)].max(0.0).sqrt();
                let eps_star = mu[j] + self.z_target * sd;
                Ok(self.err_cdfs[j].quantile(norm_cdf(eps_star)))
            })
            .collect()
    }

    /// Symmetric intervals for a batch of predictions and their rho rows.
    pub fn intervals(
        &self,
        predictions: &DMatrix<f64>,
        rho: &DMatrix<f64>,
    ) -> Result<IntervalBatch> {
        if predictions.nrows() != rho.nrows() {
            return Err(Error::Dimension(format!(
                "{} prediction rows vs {} rho rows",
                predictions.nrows(),
                rho.nrows()
            )));
        }
        if predictions.ncols() != self.err_cdfs.len() {
            return Err(Error::Dimension(format!(
                "predictions have {} outputs, calibration has {}",
                predictions.ncols(),
                self.err_cdfs.len()
            )));
        }
        let mut half = DMatrix::zeros(predictions.nrows(), predictions.ncols());
        for i in 0..predictions.nrows() {
            let row: Vec<f64> = rho.row(i).iter().copied().collect();
            let widths = self.interval_width(&row)?;
            for (j, w) in widths.into_iter().enumerate() {
                half[(i, j)] = w;
            }
        }
        IntervalBatch::symmetric(predictions, &half, self.alpha, PiMethod::Copula)
    }

    /// Conformal-score view: per output, the conditional Gaussian CDF of
    /// the instance's transformed prediction error.
    pub fn score(&self, rho_row: &[f64], err_row: &[f64]) -> Result<Vec<f64>> {
        if err_row.len() != self.err_cdfs.len() {
            return Err(Error::Dimension(format!(
                "error row length {} vs {} outputs",
                err_row.len(),
                self.err_cdfs.len()
            )));
        }
        let rho_star = self.transform_rho(rho_row)?;
        let mu = self.solver.conditional_mean(&rho_star)?;
        let cov = self.solver.conditional_cov();
        err_row
            .iter()
            .enumerate()
            .map(|(j, &e)| {
                let e_star = norm_quantile(self.err_cdfs[j].eval(e))?;
                let sd = cov[(j, j)].max(0.0).sqrt();
                if sd == 0.0 {
                    return Err(Error::Numeric(format!(
                        "degenerate conditional variance for output {j}"
                    )));
                }
                Ok(norm_cdf((e_star - mu[j]) / sd))
            })
            .collect()
    }

    pub fn to_file(&self) -> CopulaFile {
        CopulaFile {
            alpha: self.alpha,
            ridge: self.joint.ridge(),
            n_features: self.rho_cdfs.len(),
            n_outputs: self.err_cdfs.len(),
            rho_samples: self.rho_cdfs.iter().map(|c| c.samples().to_vec()).collect(),
            err_samples: self.err_cdfs.iter().map(|c| c.samples().to_vec()).collect(),
            mean: self.joint.mean().as_slice().to_vec(),
            covariance: self.joint.covariance().transpose().as_slice().to_vec(),
        }
    }
}

/// On-disk form (`copula.json`): sorted marginal samples, transformed-space
/// mean and row-major covariance, block sizes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CopulaFile {
    pub alpha: f64,
    pub ridge: f64,
    pub n_features: usize,
    pub n_outputs: usize,
    pub rho_samples: Vec<Vec<f64>>,
    pub err_samples: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub covariance: Vec<f64>,
}

impl CopulaFile {
    pub fn into_calibration(&self) -> Result<CopulaCalibration> {
        let d = self.n_features + self.n_outputs;
        if self.mean.len() != d || self.covariance.len() != d * d {
            return Err(Error::Schema(format!(
                "copula file dimensions inconsistent: {} mean entries, {} covariance entries, d = {d}",
                self.mean.len(),
                self.covariance.len()
            )));
        }
        let rho_cdfs = self
            .rho_samples
            .iter()
            .map(|s| EmpiricalCdf::fit(s))
            .collect::<Result<Vec<_>>>()?;
        let err_cdfs = self
            .err_samples
            .iter()
            .map(|s| EmpiricalCdf::fit(s))
            .collect::<Result<Vec<_>>>()?;
        let joint = MultivariateGaussian::new(
            DVector::from_column_slice(&self.mean),
            DMatrix::from_row_slice(d, d, &self.covariance),
            self.ridge,
        )?;
        let observed: Vec<usize> = (0..self.n_features).collect();
        let solver = ConditionalSolver::new(&joint, &observed)?;
        let z_target = norm_quantile(1.0 - self.alpha)?;
        Ok(CopulaCalibration {
            rho_cdfs,
            err_cdfs,
            joint,
            solver,
            alpha: self.alpha,
            z_target,
        })
    }
}

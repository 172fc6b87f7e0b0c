use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Multivariate Gaussian with an optional diagonal ridge applied before
/// any factorization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultivariateGaussian {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    ridge: f64,
}

impl MultivariateGaussian {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>, ridge: f64) -> Result<Self> {
        if covariance.nrows() != covariance.ncols() || covariance.nrows() != mean.len() {
            return Err(Error::Dimension(format!(
                "mean length {} vs covariance {}x{}",
                mean.len(),
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        let asym = (&covariance - covariance.transpose()).abs().max();
        if asym > 1e-10 {
            return Err(Error::Numeric(format!(
                "covariance asymmetric by {asym:e}"
            )));
        }
        if ridge < 0.0 {
            return Err(Error::Config(format!("negative ridge {ridge}")));
        }
        Ok(Self {
            mean,
            covariance,
            ridge,
        })
    }

    /// Mean = column means, covariance = unbiased sample covariance plus
    /// ridge times identity.
    pub fn fit(samples: &DMatrix<f64>, ridge: f64) -> Result<Self> {
        let n = samples.nrows();
        let d = samples.ncols();
        if n < 2 {
            return Err(Error::InsufficientData(format!(
                "Gaussian fit needs at least 2 rows, got {n}"
            )));
        }
        let mean = DVector::from_fn(d, |j, _| samples.column(j).mean());
        let mut centered = samples.clone();
        for j in 0..d {
            let mu = mean[j];
            centered.column_mut(j).iter_mut().for_each(|v| *v -= mu);
        }
        let mut cov = centered.transpose() * &centered / (n as f64 - 1.0);
        // Symmetrize against accumulation order noise.
        cov = (&cov + cov.transpose()) * 0.5;
        for j in 0..d {
            cov[(j, j)] += ridge;
        }
        Self::new(mean, cov, ridge)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// Conditional distribution over the unobserved indices (in ascending
    /// order) given values at `observed_idx`.
    pub fn condition(
        &self,
        observed_idx: &[usize],
        observed_vals: &[f64],
    ) -> Result<MultivariateGaussian> {
        let solver = ConditionalSolver::new(self, observed_idx)?;
        solver.condition(observed_vals)
    }
}

/// Schur-complement conditioning for a fixed observed index set. The
/// observed-block factorization is computed once and reused across queries;
/// only the conditional mean depends on the observed values.
#[derive(Debug, Clone)]
pub struct ConditionalSolver {
    unobserved_idx: Vec<usize>,
    mean_obs: DVector<f64>,
    mean_unobs: DVector<f64>,
    /// Gain matrix K = Sigma_uo * Sigma_oo^-1.
    gain: DMatrix<f64>,
    cond_cov: DMatrix<f64>,
}

impl ConditionalSolver {
    pub fn new(joint: &MultivariateGaussian, observed_idx: &[usize]) -> Result<Self> {
        let d = joint.dim();
        let mut seen = vec![false; d];
        for &i in observed_idx {
            if i >= d {
                return Err(Error::Dimension(format!("observed index {i} out of 0..{d}")));
            }
            if seen[i] {
                return Err(Error::Dimension(format!("duplicate observed index {i}")));
            }
            seen[i] = true;
        }
        let unobserved_idx: Vec<usize> = (0..d).filter(|&i| !seen[i]).collect();

        let cov = joint.covariance();
        let mean = joint.mean();
        let no = observed_idx.len();
        let nu = unobserved_idx.len();

        let mean_obs = DVector::from_fn(no, |i, _| mean[observed_idx[i]]);
        let mean_unobs = DVector::from_fn(nu, |i, _| mean[unobserved_idx[i]]);
        let cov_oo = DMatrix::from_fn(no, no, |i, j| cov[(observed_idx[i], observed_idx[j])]);
        let cov_uo = DMatrix::from_fn(nu, no, |i, j| cov[(unobserved_idx[i], observed_idx[j])]);
        let cov_uu = DMatrix::from_fn(nu, nu, |i, j| {
            cov[(unobserved_idx[i], unobserved_idx[j])]
        });

        let (gain, cond_cov) = if no == 0 {
            (DMatrix::zeros(nu, 0), cov_uu)
        } else {
            let chol: Cholesky<f64, Dyn> = Cholesky::new(cov_oo.clone()).ok_or_else(|| {
                let diag_max = (0..no).map(|i| cov_oo[(i, i)]).fold(f64::MIN, f64::max);
                let diag_min = (0..no).map(|i| cov_oo[(i, i)]).fold(f64::MAX, f64::min);
                Error::Numeric(format!(
                    "observed covariance block singular (diag condition estimate {:e})",
                    diag_max / diag_min.max(f64::MIN_POSITIVE)
                ))
            })?;
            // K = Sigma_uo * Sigma_oo^-1 via solves on the transpose.
            let gain = chol.solve(&cov_uo.transpose()).transpose();
            let mut cond = &cov_uu - &gain * cov_uo.transpose();
            cond = (&cond + cond.transpose()) * 0.5;
            (gain, cond)
        };

        Ok(Self {
            unobserved_idx,
            mean_obs,
            mean_unobs,
            gain,
            cond_cov,
        })
    }

    pub fn unobserved_idx(&self) -> &[usize] {
        &self.unobserved_idx
    }

    pub fn conditional_mean(&self, observed_vals: &[f64]) -> Result<DVector<f64>> {
        if observed_vals.len() != self.mean_obs.len() {
            return Err(Error::Dimension(format!(
                "observed values length {} vs {} observed indices",
                observed_vals.len(),
                self.mean_obs.len()
            )));
        }
        let v = DVector::from_column_slice(observed_vals);
        Ok(&self.mean_unobs + &self.gain * (v - &self.mean_obs))
    }

    pub fn conditional_cov(&self) -> &DMatrix<f64> {
        &self.cond_cov
    }

    pub fn condition(&self, observed_vals: &[f64]) -> Result<MultivariateGaussian> {
        let mean = self.conditional_mean(observed_vals)?;
        MultivariateGaussian::new(mean, self.cond_cov.clone(), 0.0)
    }
}

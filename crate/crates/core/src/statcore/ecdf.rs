use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Empirical CDF over a fixed sample, evaluated with the rank/(n+1)
/// convention so that composing with the normal quantile stays finite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    sorted_samples: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn fit(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InsufficientData("empty sample for ECDF".into()));
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite sample {bad} for ECDF")));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self {
            sorted_samples: sorted,
        })
    }

    pub fn len(&self) -> usize {
        self.sorted_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted_samples
    }

    pub fn min(&self) -> f64 {
        self.sorted_samples[0]
    }

    pub fn max(&self) -> f64 {
        *self.sorted_samples.last().unwrap()
    }

    /// count(samples <= x) / (n+1), clamped to [1/(n+1), n/(n+1)].
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.sorted_samples.len();
        let count = self.sorted_samples.partition_point(|&s| s <= x);
        let denom = (n + 1) as f64;
        let p = count as f64 / denom;
        p.clamp(1.0 / denom, n as f64 / denom)
    }

    /// Nearest-rank order statistic: sorted[ceil(q*n)] (1-indexed), clamped.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.sorted_samples.len();
        let rank = (q * n as f64).ceil() as i64;
        let rank = rank.clamp(1, n as i64) as usize;
        self.sorted_samples[rank - 1]
    }
}

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Method tag carried by every interval batch and its serialized artifacts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PiMethod {
    SplitCp,
    NormalizedCp,
    Copula,
    Knn,
}

impl PiMethod {
    pub const ALL: [PiMethod; 4] = [
        PiMethod::SplitCp,
        PiMethod::NormalizedCp,
        PiMethod::Copula,
        PiMethod::Knn,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PiMethod::SplitCp => "split_cp",
            PiMethod::NormalizedCp => "normalized_cp",
            PiMethod::Copula => "copula",
            PiMethod::Knn => "knn",
        }
    }

    pub fn all_vec() -> Vec<PiMethod> {
        Self::ALL.to_vec()
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "split_cp" => Ok(PiMethod::SplitCp),
            "normalized_cp" => Ok(PiMethod::NormalizedCp),
            "copula" => Ok(PiMethod::Copula),
            "knn" => Ok(PiMethod::Knn),
            other => Err(Error::Config(format!(
                "unknown method '{other}' (expected split_cp, normalized_cp, copula or knn)"
            ))),
        }
    }
}

impl std::fmt::Display for PiMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-instance, per-output prediction intervals, symmetric about the point
/// prediction.
#[derive(Debug, Clone)]
pub struct IntervalBatch {
    pub lower: DMatrix<f64>,
    pub upper: DMatrix<f64>,
    pub alpha: f64,
    pub method: PiMethod,
}

impl IntervalBatch {
    /// Build symmetric intervals from predictions and per-row half-widths.
    pub fn symmetric(
        predictions: &DMatrix<f64>,
        half_widths: &DMatrix<f64>,
        alpha: f64,
        method: PiMethod,
    ) -> Result<Self> {
        if predictions.shape() != half_widths.shape() {
            return Err(Error::Dimension(format!(
                "predictions {:?} vs half-widths {:?}",
                predictions.shape(),
                half_widths.shape()
            )));
        }
        Ok(Self {
            lower: predictions - half_widths,
            upper: predictions + half_widths,
            alpha,
            method,
        })
    }

    pub fn n_instances(&self) -> usize {
        self.lower.nrows()
    }

    pub fn n_outputs(&self) -> usize {
        self.lower.ncols()
    }

    pub fn width(&self, i: usize, j: usize) -> f64 {
        self.upper[(i, j)] - self.lower[(i, j)]
    }
}

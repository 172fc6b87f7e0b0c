//! Non-parametric KNN prediction intervals: neighbours in
//! reconstruction-error space via an exact KD-tree, per-output adjusted
//! quantile of the neighbours' prediction errors.

mod kdtree;

pub use kdtree::{brute_force_nearest, KdTree};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{IntervalBatch, PiMethod};
use crate::neural::CalibrationErrors;

/// k selection: round-half-to-even sqrt(n_v) as the rule of thumb, raised
/// to at least ceil(2/alpha - 1) when the calibration set is small enough
/// for the adjusted quantile to hit the neighbourhood maximum.
pub fn choose_k(n_v: usize, alpha: f64, override_k: Option<usize>) -> Result<usize> {
    if n_v == 0 {
        return Err(Error::InsufficientData("empty calibration set".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must be in (0,1), got {alpha}")));
    }
    if let Some(k) = override_k {
        if k == 0 || k > n_v {
            return Err(Error::Config(format!(
                "k override {k} outside 1..={n_v}"
            )));
        }
        return Ok(k);
    }
    let k0 = (n_v as f64).sqrt().round_ties_even() as usize;
    let threshold = 2.0 / alpha - 1.0;
    let k = if (n_v as f64) < threshold * threshold {
        k0.max(threshold.ceil() as usize).min(n_v)
    } else {
        k0
    };
    Ok(k.clamp(1, n_v))
}

/// KD-tree over calibration rho rows plus their prediction errors.
#[derive(Debug, Clone)]
pub struct KnnCalibration {
    tree: KdTree,
    errors: DMatrix<f64>,
    /// Per-feature scale applied to rho before distances (all ones unless
    /// standardization was requested).
    scale: Vec<f64>,
    pub k: usize,
    pub alpha: f64,
}

#[derive(Debug, Clone, Default)]
pub struct KnnOptions {
    pub k_override: Option<usize>,
    /// Standardize rho per feature before building the tree.
    pub standardize: bool,
}

impl KnnCalibration {
    pub fn fit(cal: &CalibrationErrors, alpha: f64, opts: &KnnOptions) -> Result<Self> {
        let n_v = cal.n_rows();
        let k = choose_k(n_v, alpha, opts.k_override)?;
        let dims = cal.rho.ncols();

        let scale = if opts.standardize {
            (0..dims)
                .map(|j| {
                    let mu = cal.rho.column(j).mean();
                    let var = cal
                        .rho
                        .column(j)
                        .iter()
                        .map(|v| (v - mu) * (v - mu))
                        .sum::<f64>()
                        / n_v as f64;
                    let sd = var.sqrt();
                    if sd > 0.0 {
                        sd
                    } else {
                        1.0
                    }
                })
                .collect()
        } else {
            vec![1.0; dims]
        };

        let points: Vec<Vec<f64>> = (0..n_v)
            .map(|i| {
                (0..dims)
                    .map(|j| cal.rho[(i, j)] / scale[j])
                    .collect()
            })
            .collect();
        let tree = KdTree::build(points)?;
        Ok(Self {
            tree,
            errors: cal.err.clone(),
            scale,
            k,
            alpha,
        })
    }

    pub fn n_calibration(&self) -> usize {
        self.tree.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.errors.ncols()
    }

    pub fn neighbours(&self, rho_row: &[f64]) -> Result<Vec<usize>> {
        let query: Vec<f64> = rho_row
            .iter()
            .zip(&self.scale)
            .map(|(v, s)| v / s)
            .collect();
        self.tree.nearest(&query, self.k)
    }

    /// Per-output half-width: the adjusted quantile of the k neighbours'
    /// errors, capped at the neighbourhood maximum when the rank exceeds k.
    pub fn interval_width(&self, rho_row: &[f64]) -> Result<Vec<f64>> {
        let neigh = self.neighbours(rho_row)?;
        let k = neigh.len();
        let rank = ((k + 1) as f64 * (1.0 - self.alpha)).ceil() as usize;
        let rank = rank.clamp(1, k);
        Ok((0..self.errors.ncols())
            .map(|j| {
                let mut vals: Vec<f64> = neigh.iter().map(|&i| self.errors[(i, j)]).collect();
                vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
                vals[rank - 1]
            })
            .collect())
    }

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
        if predictions.ncols() != self.errors.ncols() {
            return Err(Error::Dimension(format!(
                "predictions have {} outputs, calibration has {}",
                predictions.ncols(),
                self.errors.ncols()
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
        IntervalBatch::symmetric(predictions, &half, self.alpha, PiMethod::Knn)
    }

    pub fn to_file(&self) -> KnnFile {
        let n = self.tree.len();
        let dims = self.tree.dims();
        KnnFile {
            k: self.k,
            alpha: self.alpha,
            metric: "euclidean".into(),
            scale: self.scale.clone(),
            rho: (0..n)
                .map(|i| {
                    // Stored unscaled; the tree is rebuilt on load.
                    (0..dims).map(|j| self.point_unscaled(i, j)).collect()
                })
                .collect(),
            errors: (0..n)
                .map(|i| self.errors.row(i).iter().copied().collect())
                .collect(),
        }
    }

    fn point_unscaled(&self, i: usize, j: usize) -> f64 {
        // Tree points were divided by scale at build time.
        self.tree_point(i, j) * self.scale[j]
    }

    fn tree_point(&self, i: usize, j: usize) -> f64 {
        self.tree_points()[i][j]
    }

    fn tree_points(&self) -> &[Vec<f64>] {
        self.tree.points()
    }
}

/// On-disk form (`knn.json`): k, alpha, metric tag and the calibration
/// matrices. The tree is rebuilt deterministically on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnFile {
    pub k: usize,
    pub alpha: f64,
    pub metric: String,
    pub scale: Vec<f64>,
    pub rho: Vec<Vec<f64>>,
    pub errors: Vec<Vec<f64>>,
}

impl KnnFile {
    pub fn into_calibration(&self) -> Result<KnnCalibration> {
        if self.metric != "euclidean" {
            return Err(Error::Schema(format!("unsupported metric '{}'", self.metric)));
        }
        let n = self.rho.len();
        if n == 0 || self.errors.len() != n {
            return Err(Error::Schema(format!(
                "{} rho rows vs {} error rows",
                n,
                self.errors.len()
            )));
        }
        let dims = self.rho[0].len();
        let points: Vec<Vec<f64>> = self
            .rho
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.scale)
                    .map(|(v, s)| v / s)
                    .collect()
            })
            .collect();
        let tree = KdTree::build(points)?;
        let n_out = self.errors[0].len();
        let mut errors = DMatrix::zeros(n, n_out);
        for (i, row) in self.errors.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                errors[(i, j)] = v;
            }
        }
        if self.scale.len() != dims {
            return Err(Error::Schema("scale length mismatch".into()));
        }
        Ok(KnnCalibration {
            tree,
            errors,
            scale: self.scale.clone(),
            k: self.k,
            alpha: self.alpha,
        })
    }
}

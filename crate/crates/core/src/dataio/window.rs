use nalgebra::DMatrix;

use crate::dataio::preprocess::Normalizer;
use crate::dataio::raw::RawSeries;
use crate::dataio::split::{Split, SplitAssignment};
use crate::error::{Error, Result};

/// Flattened sliding-window forecast dataset. Inputs hold W steps of every
/// channel (channel-major), targets hold H horizons of the target channels
/// (horizon-major): target column j is horizon j / C_out + 1, channel
/// j % C_out.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    pub inputs: DMatrix<f64>,
    pub targets: DMatrix<f64>,
    pub split: Vec<Split>,
    pub subjects: Vec<String>,
    pub feature_names: Vec<String>,
    pub target_names: Vec<String>,
    pub normalizer: Normalizer,
    pub w: usize,
    pub h: usize,
    pub channel_names: Vec<String>,
    pub target_channels: Vec<String>,
}

impl WindowedDataset {
    pub fn n_rows(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.targets.ncols()
    }

    pub fn rows_in(&self, split: Split) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| self.split[i] == split).collect()
    }

    /// Input and target submatrices for one split, rows in dataset order.
    pub fn subset(&self, split: Split) -> (DMatrix<f64>, DMatrix<f64>) {
        let rows = self.rows_in(split);
        let inputs = DMatrix::from_fn(rows.len(), self.n_inputs(), |i, j| {
            self.inputs[(rows[i], j)]
        });
        let targets = DMatrix::from_fn(rows.len(), self.n_outputs(), |i, j| {
            self.targets[(rows[i], j)]
        });
        (inputs, targets)
    }

    /// Horizon (1-based) and channel index of target column j.
    pub fn target_position(&self, j: usize) -> (usize, usize) {
        let c_out = self.target_channels.len();
        (j / c_out + 1, j % c_out)
    }
}

/// Cut every valid anchor of every subject into one row. Subjects shorter
/// than W + H are skipped; windows never span two subjects. Series must be
/// fully observed (preprocess with drop_missing first).
pub fn windowize(
    series: &[RawSeries],
    w: usize,
    h: usize,
    target_channels: &[String],
    assignment: &SplitAssignment,
    normalizer: Normalizer,
) -> Result<WindowedDataset> {
    if w == 0 || h == 0 {
        return Err(Error::Config(format!("window sizes must be positive, got W={w} H={h}")));
    }
    let first = series
        .first()
        .ok_or_else(|| Error::InsufficientData("windowize needs at least one series".into()))?;
    let channel_names = first.channel_names.clone();
    let target_idx: Vec<usize> = target_channels
        .iter()
        .map(|name| first.channel_index(name))
        .collect::<Result<_>>()?;

    let n_inputs = w * channel_names.len();
    let n_outputs = h * target_channels.len();
    let mut inputs: Vec<f64> = Vec::new();
    let mut targets: Vec<f64> = Vec::new();
    let mut split = Vec::new();
    let mut subjects = Vec::new();

    for s in series {
        if s.channel_names != channel_names {
            return Err(Error::Schema(format!(
                "series '{}' channels differ from '{}'",
                s.subject_id, first.subject_id
            )));
        }
        if s.values.iter().any(|col| col.iter().any(|v| !v.is_finite())) {
            return Err(Error::Schema(format!(
                "series '{}' has missing values; drop them before windowing",
                s.subject_id
            )));
        }
        let label = *assignment.get(&s.subject_id).ok_or_else(|| {
            Error::Config(format!("subject '{}' missing from split assignment", s.subject_id))
        })?;
        let n = s.len();
        if n < w + h {
            continue; // too short for a single window
        }
        // Anchor t is the last input step; 0-based t runs w-1 ..= n-1-h.
        for t in (w - 1)..(n - h) {
            for col in &s.values {
                inputs.extend_from_slice(&col[t + 1 - w..=t]);
            }
            for hh in 1..=h {
                for &c in &target_idx {
                    targets.push(s.values[c][t + hh]);
                }
            }
            split.push(label);
            subjects.push(s.subject_id.clone());
        }
    }

    let n_rows = split.len();
    if n_rows == 0 {
        return Err(Error::InsufficientData(format!(
            "no subject is long enough for W={w}, H={h}"
        )));
    }

    let feature_names = channel_names
        .iter()
        .flat_map(|name| {
            (0..w).map(move |k| {
                let lag = w - 1 - k;
                if lag == 0 {
                    format!("{name}[t]")
                } else {
                    format!("{name}[t-{lag}]")
                }
            })
        })
        .collect();
    let target_names = (1..=h)
        .flat_map(|hh| target_channels.iter().map(move |name| format!("{name}[t+{hh}]")))
        .collect();

    Ok(WindowedDataset {
        inputs: DMatrix::from_row_slice(n_rows, n_inputs, &inputs),
        targets: DMatrix::from_row_slice(n_rows, n_outputs, &targets),
        split,
        subjects,
        feature_names,
        target_names,
        normalizer,
        w,
        h,
        channel_names,
        target_channels: target_channels.to_vec(),
    })
}

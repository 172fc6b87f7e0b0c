use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::pi::{covp, cwfdc, default_delta, picp, pinafd, pinaw, DEFAULT_BETA, DEFAULT_RHO_W};
use crate::error::{Error, Result};
use crate::interval::IntervalBatch;

pub const METRIC_NAMES: [&str; 5] = ["picp", "covp", "pinaw", "pinafd", "cwfdc"];

/// One scope's interval-quality metrics. The CWFDC identity
/// cwfdc = pinaw + rho_w * pinafd + beta * covp holds by construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PiMetrics {
    pub picp: f64,
    pub covp: f64,
    pub pinaw: f64,
    pub pinafd: f64,
    pub cwfdc: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportConfig {
    pub alpha: f64,
    /// Coverage margin; None uses alpha / 50.
    pub delta: Option<f64>,
    pub rho_w: f64,
    pub beta: f64,
    /// Number of forecast horizons (outputs are horizon-major blocks of
    /// `output_names.len()` channels).
    pub horizons: usize,
    pub output_names: Vec<String>,
}

impl ReportConfig {
    pub fn new(alpha: f64, horizons: usize, output_names: Vec<String>) -> Self {
        Self {
            alpha,
            delta: None,
            rho_w: DEFAULT_RHO_W,
            beta: DEFAULT_BETA,
            horizons,
            output_names,
        }
    }

    fn delta(&self) -> f64 {
        self.delta.unwrap_or_else(|| default_delta(self.alpha))
    }
}

/// Long-format row: one metric value for one method at one scope.
/// `output` is "pooled" for the horizon-pooled rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub output: String,
    pub horizon: usize,
    pub metric: String,
    pub value: f64,
    pub normalized_value: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PiReport {
    pub rows: Vec<ReportRow>,
}

fn metrics_to_rows(
    rows: &mut Vec<ReportRow>,
    method: &str,
    output: &str,
    horizon: usize,
    m: &PiMetrics,
) {
    let values = [m.picp, m.covp, m.pinaw, m.pinafd, m.cwfdc];
    for (name, value) in METRIC_NAMES.iter().zip(values) {
        rows.push(ReportRow {
            method: method.to_string(),
            output: output.to_string(),
            horizon,
            metric: name.to_string(),
            value,
            normalized_value: None,
        });
    }
}

/// Metrics per method x output x horizon plus horizon-pooled rows, with
/// min-max normalization across methods within each scope and metric.
pub fn build_report(
    methods: &[(String, IntervalBatch)],
    y: &DMatrix<f64>,
    ranges: &[f64],
    cfg: &ReportConfig,
) -> Result<PiReport> {
    if methods.is_empty() {
        return Err(Error::Config("no methods to report on".into()));
    }
    let n_outputs = y.ncols();
    let c_out = cfg.output_names.len();
    if cfg.horizons * c_out != n_outputs {
        return Err(Error::Dimension(format!(
            "{} horizons x {} channels != {} outputs",
            cfg.horizons, c_out, n_outputs
        )));
    }
    for (name, batch) in methods {
        if batch.n_instances() != y.nrows() || batch.n_outputs() != n_outputs {
            return Err(Error::Dimension(format!(
                "method '{name}' batch {}x{} vs targets {:?}",
                batch.n_instances(),
                batch.n_outputs(),
                y.shape()
            )));
        }
    }

    let delta = cfg.delta();
    let mut rows = Vec::new();
    for (name, batch) in methods {
        let picp_cols = picp(y, batch)?;
        let pinaw_cols = pinaw(batch, ranges)?;
        let pinafd_cols = pinafd(y, batch, ranges)?;

        for j in 0..n_outputs {
            let horizon = j / c_out + 1;
            let channel = &cfg.output_names[j % c_out];
            let cv = covp(picp_cols[j], cfg.alpha, delta);
            let m = PiMetrics {
                picp: picp_cols[j],
                covp: cv,
                pinaw: pinaw_cols[j],
                pinafd: pinafd_cols[j],
                cwfdc: cwfdc(pinaw_cols[j], pinafd_cols[j], cv, cfg.rho_w, cfg.beta),
            };
            metrics_to_rows(&mut rows, name, channel, horizon, &m);
        }

        // Horizon-pooled scope: all channels of a horizon at once.
        for h in 0..cfg.horizons {
            let cols: Vec<usize> = (h * c_out..(h + 1) * c_out).collect();
            let pooled_picp =
                cols.iter().map(|&j| picp_cols[j]).sum::<f64>() / c_out as f64;
            let pooled_pinaw =
                cols.iter().map(|&j| pinaw_cols[j]).sum::<f64>() / c_out as f64;
            // PINAFD pools the raw outlier distances, not per-column means.
            let mut total = 0.0;
            let mut outliers = 0usize;
            for &j in &cols {
                for i in 0..y.nrows() {
                    let (v, lo, hi) = (y[(i, j)], batch.lower[(i, j)], batch.upper[(i, j)]);
                    if v < lo || v > hi {
                        total += (v - hi).abs().min((lo - v).abs()) / ranges[j];
                        outliers += 1;
                    }
                }
            }
            let pooled_pinafd = if outliers == 0 {
                0.0
            } else {
                total / outliers as f64
            };
            let cv = covp(pooled_picp, cfg.alpha, delta);
            let m = PiMetrics {
                picp: pooled_picp,
                covp: cv,
                pinaw: pooled_pinaw,
                pinafd: pooled_pinafd,
                cwfdc: cwfdc(pooled_pinaw, pooled_pinafd, cv, cfg.rho_w, cfg.beta),
            };
            metrics_to_rows(&mut rows, name, "pooled", h + 1, &m);
        }
    }

    let mut report = PiReport { rows };
    normalize_rows(&mut report.rows);
    Ok(report)
}

/// Min-max across methods within each (output, horizon, metric) group;
/// a degenerate group maps to 0.
fn normalize_rows(rows: &mut [ReportRow]) {
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<(String, usize, String), (f64, f64)> = BTreeMap::new();
    for row in rows.iter() {
        let key = (row.output.clone(), row.horizon, row.metric.clone());
        let entry = groups.entry(key).or_insert((f64::INFINITY, f64::NEG_INFINITY));
        entry.0 = entry.0.min(row.value);
        entry.1 = entry.1.max(row.value);
    }
    for row in rows.iter_mut() {
        let key = (row.output.clone(), row.horizon, row.metric.clone());
        let (min, max) = groups[&key];
        row.normalized_value = Some(if max > min {
            (row.value - min) / (max - min)
        } else {
            0.0
        });
    }
}

/// Mean +- std aggregation of per-seed reports; rows must agree on scope
/// across seeds (same pipeline, different seeds).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: String,
    pub output: String,
    pub horizon: usize,
    pub metric: String,
    pub value: f64,
    pub value_std: f64,
    pub normalized_value: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AggregateReport {
    pub n_seeds: usize,
    pub rows: Vec<AggregateRow>,
}

pub fn aggregate_reports(reports: &[PiReport]) -> Result<AggregateReport> {
    let Some(first) = reports.first() else {
        return Err(Error::InsufficientData("no reports to aggregate".into()));
    };
    let n = reports.len() as f64;
    let mut rows = Vec::with_capacity(first.rows.len());
    for (idx, proto) in first.rows.iter().enumerate() {
        let mut values = Vec::with_capacity(reports.len());
        for report in reports {
            let row = report.rows.get(idx).ok_or_else(|| {
                Error::Dimension("reports have differing row counts".into())
            })?;
            if row.method != proto.method
                || row.output != proto.output
                || row.horizon != proto.horizon
                || row.metric != proto.metric
            {
                return Err(Error::Dimension(format!(
                    "report rows disagree at index {idx}"
                )));
            }
            values.push(row.value);
        }
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        rows.push(AggregateRow {
            method: proto.method.clone(),
            output: proto.output.clone(),
            horizon: proto.horizon,
            metric: proto.metric.clone(),
            value: mean,
            value_std: var.sqrt(),
            normalized_value: None,
        });
    }
    // Re-normalize on the aggregated means.
    let mut as_rows: Vec<ReportRow> = rows
        .iter()
        .map(|r| ReportRow {
            method: r.method.clone(),
            output: r.output.clone(),
            horizon: r.horizon,
            metric: r.metric.clone(),
            value: r.value,
            normalized_value: None,
        })
        .collect();
    normalize_rows(&mut as_rows);
    for (agg, row) in rows.iter_mut().zip(&as_rows) {
        agg.normalized_value = row.normalized_value;
    }
    Ok(AggregateReport {
        n_seeds: reports.len(),
        rows,
    })
}

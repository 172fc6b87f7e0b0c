use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataio::raw::RawSeries;
use crate::error::{Error, Result};

/// Per-period statistic emitted by resampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleStat {
    Mean,
    Std,
}

impl ResampleStat {
    fn suffix(self) -> &'static str {
        match self {
            ResampleStat::Mean => "mean",
            ResampleStat::Std => "std",
        }
    }
}

/// Normalization flavour applied after cleaning and resampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Zscore,
    Minmax,
}

/// Cleaning, resampling and normalization settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreprocessConfig {
    /// Rows with any channel value strictly below this are dropped.
    pub value_floor: Option<f64>,
    /// Rows where a named channel exceeds its ceiling are dropped.
    #[serde(default)]
    pub value_ceilings: BTreeMap<String, f64>,
    /// Resampling period in seconds; None leaves the sampling untouched.
    pub resample_period: Option<i64>,
    #[serde(default)]
    pub resample_stats: Vec<ResampleStat>,
    pub normalization: Normalization,
    #[serde(default)]
    pub drop_missing: bool,
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self.resample_period {
            if p <= 0 {
                return Err(Error::Config(format!("resample_period must be positive, got {p}")));
            }
            if self.resample_stats.is_empty() {
                return Err(Error::Config("resample_period set but resample_stats empty".into()));
            }
        }
        if let Some((name, c)) = self.value_ceilings.iter().find(|(_, c)| !c.is_finite()) {
            return Err(Error::Config(format!("ceiling for '{name}' must be finite, got {c}")));
        }
        Ok(())
    }
}

/// Clean, resample and (optionally) drop incomplete rows of one series.
/// Normalization is separate because its statistics come from the training
/// subjects only. An all-filtered series comes back empty, not as an error.
pub fn preprocess(series: &RawSeries, cfg: &PreprocessConfig) -> Result<RawSeries> {
    cfg.validate()?;
    let mut out = clean(series, cfg);
    if let Some(period) = cfg.resample_period {
        out = resample(&out, period, &cfg.resample_stats)?;
    }
    if cfg.drop_missing {
        let keep: Vec<usize> = (0..out.len())
            .filter(|&i| out.values.iter().all(|col| col[i].is_finite()))
            .collect();
        out = out.filter_rows(&keep);
    }
    Ok(out)
}

fn clean(series: &RawSeries, cfg: &PreprocessConfig) -> RawSeries {
    let ceilings: Vec<Option<f64>> = series
        .channel_names
        .iter()
        .map(|name| cfg.value_ceilings.get(name).copied())
        .collect();
    let keep: Vec<usize> = (0..series.len())
        .filter(|&i| {
            series.values.iter().enumerate().all(|(c, col)| {
                let v = col[i];
                if v.is_nan() {
                    return true; // missing values are handled by drop_missing
                }
                if let Some(floor) = cfg.value_floor {
                    if v < floor {
                        return false;
                    }
                }
                if let Some(ceiling) = ceilings[c] {
                    if v > ceiling {
                        return false;
                    }
                }
                true
            })
        })
        .collect();
    series.filter_rows(&keep)
}

/// Aggregate into fixed periods aligned at epoch 0, emitting one channel per
/// (source channel, stat). Empty periods produce no row; NaN samples are
/// excluded from a period's statistic.
fn resample(series: &RawSeries, period: i64, stats: &[ResampleStat]) -> Result<RawSeries> {
    if stats.is_empty() {
        return Err(Error::Config("resample_stats must be nonempty".into()));
    }
    let mut buckets: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &ts) in series.timestamps.iter().enumerate() {
        buckets.entry(ts.div_euclid(period)).or_default().push(i);
    }
    let channel_names: Vec<String> = series
        .channel_names
        .iter()
        .flat_map(|name| stats.iter().map(move |s| format!("{name}_{}", s.suffix())))
        .collect();
    let mut timestamps = Vec::with_capacity(buckets.len());
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(buckets.len()); channel_names.len()];
    for (bucket, rows) in buckets {
        timestamps.push(bucket * period);
        let mut out_col = 0;
        for col in &series.values {
            let sample: Vec<f64> = rows.iter().map(|&i| col[i]).filter(|v| v.is_finite()).collect();
            for stat in stats {
                values[out_col].push(apply_stat(&sample, *stat));
                out_col += 1;
            }
        }
    }
    Ok(RawSeries {
        subject_id: series.subject_id.clone(),
        timestamps,
        channel_names,
        values,
    })
}

fn apply_stat(sample: &[f64], stat: ResampleStat) -> f64 {
    if sample.is_empty() {
        return f64::NAN;
    }
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    match stat {
        ResampleStat::Mean => mean,
        ResampleStat::Std => {
            let var = sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            var.sqrt()
        }
    }
}

/// Stored per-channel statistics for an invertible transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub kind: Normalization,
    pub channel_names: Vec<String>,
    /// Per channel: (mean, std) for zscore, (min, span) for minmax.
    pub stats: Vec<(f64, f64)>,
}

impl Normalizer {
    /// Fit on the training subjects only. Degenerate channels (constant, or
    /// entirely missing) get scale 1 so the transform stays invertible.
    pub fn fit(train: &[&RawSeries], kind: Normalization) -> Result<Normalizer> {
        let first = train
            .first()
            .ok_or_else(|| Error::InsufficientData("normalizer fit needs training subjects".into()))?;
        let channel_names = first.channel_names.clone();
        let mut stats = Vec::with_capacity(channel_names.len());
        for c in 0..channel_names.len() {
            let sample: Vec<f64> = train
                .iter()
                .flat_map(|s| s.values[c].iter().copied())
                .filter(|v| v.is_finite())
                .collect();
            stats.push(match kind {
                Normalization::Zscore => {
                    if sample.is_empty() {
                        (0.0, 1.0)
                    } else {
                        let n = sample.len() as f64;
                        let mean = sample.iter().sum::<f64>() / n;
                        let std =
                            (sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                        (mean, if std > 0.0 { std } else { 1.0 })
                    }
                }
                Normalization::Minmax => {
                    if sample.is_empty() {
                        (0.0, 1.0)
                    } else {
                        let min = sample.iter().copied().fold(f64::INFINITY, f64::min);
                        let max = sample.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        let span = max - min;
                        (min, if span > 0.0 { span } else { 1.0 })
                    }
                }
            });
        }
        Ok(Normalizer {
            kind,
            channel_names,
            stats,
        })
    }

    fn check(&self, series: &RawSeries) -> Result<()> {
        if series.channel_names != self.channel_names {
            return Err(Error::Schema(format!(
                "normalizer channels {:?} do not match series {:?}",
                self.channel_names, series.channel_names
            )));
        }
        Ok(())
    }

    pub fn apply(&self, series: &RawSeries) -> Result<RawSeries> {
        self.check(series)?;
        let mut out = series.clone();
        for (c, col) in out.values.iter_mut().enumerate() {
            let (offset, scale) = self.stats[c];
            for v in col.iter_mut() {
                *v = (*v - offset) / scale;
            }
        }
        Ok(out)
    }

    pub fn invert(&self, series: &RawSeries) -> Result<RawSeries> {
        self.check(series)?;
        let mut out = series.clone();
        for (c, col) in out.values.iter_mut().enumerate() {
            let (offset, scale) = self.stats[c];
            for v in col.iter_mut() {
                *v = *v * scale + offset;
            }
        }
        Ok(out)
    }

    /// Invert a single value of one channel (used on model outputs).
    pub fn invert_value(&self, channel: usize, v: f64) -> f64 {
        let (offset, scale) = self.stats[channel];
        v * scale + offset
    }

    /// Half-widths and widths scale without re-centering.
    pub fn scale(&self, channel: usize) -> f64 {
        self.stats[channel].1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn series(values: Vec<Vec<f64>>, names: &[&str]) -> RawSeries {
        let n = values[0].len();
        RawSeries {
            subject_id: "s0".into(),
            timestamps: (0..n as i64).collect(),
            channel_names: names.iter().map(|s| s.to_string()).collect(),
            values,
        }
    }

    fn base_cfg() -> PreprocessConfig {
        PreprocessConfig {
            value_floor: None,
            value_ceilings: BTreeMap::new(),
            resample_period: None,
            resample_stats: vec![],
            normalization: Normalization::Zscore,
            drop_missing: false,
        }
    }

    #[test]
    fn floor_drops_negative_rows() {
        let s = series(vec![vec![1.0, -1.0, 2.0]], &["a"]);
        let cfg = PreprocessConfig {
            value_floor: Some(0.0),
            ..base_cfg()
        };
        let out = preprocess(&s, &cfg).unwrap();
        assert_eq!(out.values[0], vec![1.0, 2.0]);
    }

    #[test]
    fn ceiling_drops_whole_row() {
        let s = series(vec![vec![100.0, 300.0], vec![1.0, 2.0]], &["bp", "hr"]);
        let mut ceilings = BTreeMap::new();
        ceilings.insert("bp".to_string(), 250.0);
        let cfg = PreprocessConfig {
            value_ceilings: ceilings,
            ..base_cfg()
        };
        let out = preprocess(&s, &cfg).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.values[1], vec![1.0]);
    }

    #[test]
    fn resample_minute_mean() {
        // 60 per-second samples with a fixed known mean.
        let vals: Vec<f64> = (0..60).map(|i| i as f64).collect();
        let expected = vals.iter().sum::<f64>() / 60.0;
        let s = RawSeries {
            subject_id: "s0".into(),
            timestamps: (0..60).collect(),
            channel_names: vec!["a".into()],
            values: vec![vals],
        };
        let cfg = PreprocessConfig {
            resample_period: Some(60),
            resample_stats: vec![ResampleStat::Mean],
            ..base_cfg()
        };
        let out = preprocess(&s, &cfg).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.channel_names, vec!["a_mean"]);
        assert_abs_diff_eq!(out.values[0][0], expected, epsilon = 1e-12);
    }

    #[test]
    fn resample_emits_mean_and_std_channels() {
        let s = RawSeries {
            subject_id: "s0".into(),
            timestamps: vec![0, 30, 60, 90],
            channel_names: vec!["a".into()],
            values: vec![vec![1.0, 3.0, 5.0, 5.0]],
        };
        let cfg = PreprocessConfig {
            resample_period: Some(60),
            resample_stats: vec![ResampleStat::Mean, ResampleStat::Std],
            ..base_cfg()
        };
        let out = preprocess(&s, &cfg).unwrap();
        assert_eq!(out.channel_names, vec!["a_mean", "a_std"]);
        assert_eq!(out.timestamps, vec![0, 60]);
        assert_abs_diff_eq!(out.values[0][0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.values[1][0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.values[0][1], 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.values[1][1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_period_produces_no_row() {
        let s = RawSeries {
            subject_id: "s0".into(),
            timestamps: vec![0, 130],
            channel_names: vec!["a".into()],
            values: vec![vec![1.0, 2.0]],
        };
        let cfg = PreprocessConfig {
            resample_period: Some(60),
            resample_stats: vec![ResampleStat::Mean],
            ..base_cfg()
        };
        let out = preprocess(&s, &cfg).unwrap();
        assert_eq!(out.timestamps, vec![0, 120]);
    }

    #[test]
    fn resample_mean_preserves_global_mean_of_full_periods() {
        let vals: Vec<f64> = (0..120).map(|i| (i as f64 * 0.37).sin()).collect();
        let global = vals.iter().sum::<f64>() / 120.0;
        let s = RawSeries {
            subject_id: "s0".into(),
            timestamps: (0..120).collect(),
            channel_names: vec!["a".into()],
            values: vec![vals],
        };
        let cfg = PreprocessConfig {
            resample_period: Some(60),
            resample_stats: vec![ResampleStat::Mean],
            ..base_cfg()
        };
        let out = preprocess(&s, &cfg).unwrap();
        let resampled = out.values[0].iter().sum::<f64>() / out.len() as f64;
        assert_abs_diff_eq!(resampled, global, epsilon = 1e-12);
    }

    #[test]
    fn all_rows_filtered_is_empty_not_error() {
        let s = series(vec![vec![-1.0, -2.0]], &["a"]);
        let cfg = PreprocessConfig {
            value_floor: Some(0.0),
            ..base_cfg()
        };
        let out = preprocess(&s, &cfg).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn drop_missing_removes_nan_rows() {
        let s = series(vec![vec![1.0, f64::NAN, 3.0], vec![4.0, 5.0, 6.0]], &["a", "b"]);
        let cfg = PreprocessConfig {
            drop_missing: true,
            ..base_cfg()
        };
        let out = preprocess(&s, &cfg).unwrap();
        assert_eq!(out.values[0], vec![1.0, 3.0]);
        assert_eq!(out.values[1], vec![4.0, 6.0]);
    }

    #[test]
    fn zscore_constant_channel_uses_unit_std() {
        let s = series(vec![vec![5.0, 5.0, 5.0]], &["a"]);
        let norm = Normalizer::fit(&[&s], Normalization::Zscore).unwrap();
        assert_eq!(norm.stats[0], (5.0, 1.0));
        let out = norm.apply(&s).unwrap();
        assert_eq!(out.values[0], vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn normalizer_uses_training_subjects_only() {
        let train = series(vec![vec![0.0, 2.0]], &["a"]);
        let norm = Normalizer::fit(&[&train], Normalization::Zscore).unwrap();
        assert_abs_diff_eq!(norm.stats[0].0, 1.0, epsilon = 1e-15);
        // Applying to a differently distributed series still uses train stats.
        let other = series(vec![vec![101.0]], &["a"]);
        let out = norm.apply(&other).unwrap();
        assert_abs_diff_eq!(out.values[0][0], 100.0 / norm.stats[0].1, epsilon = 1e-12);
    }

    #[test]
    fn minmax_maps_to_unit_interval() {
        let s = series(vec![vec![2.0, 4.0, 6.0]], &["a"]);
        let norm = Normalizer::fit(&[&s], Normalization::Minmax).unwrap();
        let out = norm.apply(&s).unwrap();
        assert_eq!(out.values[0], vec![0.0, 0.5, 1.0]);
    }

    proptest! {
        #[test]
        fn apply_then_invert_round_trips(
            vals in proptest::collection::vec(-1e6f64..1e6, 2..40),
            minmax in proptest::bool::ANY,
        ) {
            let s = series(vec![vals.clone()], &["a"]);
            let kind = if minmax { Normalization::Minmax } else { Normalization::Zscore };
            let norm = Normalizer::fit(&[&s], kind).unwrap();
            let back = norm.invert(&norm.apply(&s).unwrap()).unwrap();
            // The transform centers at the channel scale, so round-trip
            // error is relative to that scale, not to the raw value.
            let scale = norm.stats[0].1.abs().max(norm.stats[0].0.abs()).max(1.0);
            for (orig, rec) in vals.iter().zip(&back.values[0]) {
                let tol = 1e-12 * orig.abs().max(scale);
                prop_assert!((orig - rec).abs() <= tol, "{} vs {}", orig, rec);
            }
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statcore::{pearson, spearman};

/// Correlation flavour for the uncertainty-vs-error metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationKind {
    Pearson,
    Spearman,
}

/// Area under the risk-coverage curve: mean loss of the k most-confident
/// instances, averaged over all prefixes k = 1..n.
pub fn aurc(losses: &[f64], uncertainties: &[f64]) -> Result<f64> {
    if losses.len() != uncertainties.len() || losses.is_empty() {
        return Err(Error::Dimension(format!(
            "aurc needs equal nonempty vectors, got {} and {}",
            losses.len(),
            uncertainties.len()
        )));
    }
    let n = losses.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        uncertainties[a]
            .partial_cmp(&uncertainties[b])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut prefix = 0.0;
    let mut total = 0.0;
    for (k, &i) in order.iter().enumerate() {
        prefix += losses[i];
        total += prefix / (k + 1) as f64;
    }
    Ok(total / n as f64)
}

/// Risk restricted to confident instances per sigma level. Uncertainties
/// beyond Q3 + 1.5 IQR are dropped before min-max normalization; a level
/// with no retained instance at or below it reports None.
pub fn sigma_risk(
    losses: &[f64],
    uncertainties: &[f64],
    sigma_levels: &[f64],
) -> Result<Vec<(f64, Option<f64>)>> {
    if losses.len() != uncertainties.len() || losses.is_empty() {
        return Err(Error::Dimension(format!(
            "sigma_risk needs equal nonempty vectors, got {} and {}",
            losses.len(),
            uncertainties.len()
        )));
    }
    let mut sorted: Vec<f64> = uncertainties.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q1 = quantile_linear(&sorted, 0.25);
    let q3 = quantile_linear(&sorted, 0.75);
    let cutoff = q3 + 1.5 * (q3 - q1);

    let retained: Vec<usize> = (0..losses.len())
        .filter(|&i| uncertainties[i] <= cutoff)
        .collect();
    let min = retained
        .iter()
        .map(|&i| uncertainties[i])
        .fold(f64::INFINITY, f64::min);
    let max = retained
        .iter()
        .map(|&i| uncertainties[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;

    Ok(sigma_levels
        .iter()
        .map(|&sigma| {
            let mut total = 0.0;
            let mut count = 0usize;
            for &i in &retained {
                // Degenerate range maps every value to 0.
                let normalized = if span > 0.0 {
                    (uncertainties[i] - min) / span
                } else {
                    0.0
                };
                if normalized <= sigma {
                    total += losses[i];
                    count += 1;
                }
            }
            let risk = if count == 0 {
                None
            } else {
                Some(total / count as f64)
            };
            (sigma, risk)
        })
        .collect())
}

/// Type-7 (linear interpolation) quantile of a sorted sample.
fn quantile_linear(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Correlation, AURC and sigma-risk of an uncertainty estimate against
/// per-instance prediction loss.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UncertaintyMetrics {
    pub correlation: f64,
    pub aurc: f64,
    pub sigma_risk: Vec<(f64, Option<f64>)>,
}

pub fn uncertainty_metrics(
    losses: &[f64],
    uncertainties: &[f64],
    sigma_levels: &[f64],
    correlation: CorrelationKind,
) -> Result<UncertaintyMetrics> {
    let correlation = match correlation {
        CorrelationKind::Pearson => pearson(uncertainties, losses)?,
        CorrelationKind::Spearman => spearman(uncertainties, losses)?,
    };
    Ok(UncertaintyMetrics {
        correlation,
        aurc: aurc(losses, uncertainties)?,
        sigma_risk: sigma_risk(losses, uncertainties, sigma_levels)?,
    })
}

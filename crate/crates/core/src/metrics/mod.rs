//! Interval-quality metrics (PICP, CovP, PINAW, PINAFD, CWFDC),
//! uncertainty-quality metrics (correlation, AURC, sigma-risk) and the
//! comparison report across interval methods.

mod pi;
mod report;
mod uncertainty;

pub use pi::{covp, cwfdc, default_delta, picp, pinafd, pinaw, DEFAULT_BETA, DEFAULT_RHO_W};
pub use report::{
    aggregate_reports, build_report, AggregateReport, AggregateRow, PiMetrics, PiReport,
    ReportConfig, ReportRow, METRIC_NAMES,
};
pub use uncertainty::{
    aurc, sigma_risk, uncertainty_metrics, CorrelationKind, UncertaintyMetrics,
};

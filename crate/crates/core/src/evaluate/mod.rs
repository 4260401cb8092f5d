//! Evaluation indices on occurrence records and observed-versus-ensemble
//! comparison reports.
//!
//! Distribution-type indices (seasonal percent wet days, seasonal longest dry
//! run) are compared as Q-Q pairs of pooled values; the others (lagged
//! interstation correlations, aggregated wet-day totals) label by label.

mod compare;
mod indices;
mod report;
mod stats;

pub use compare::{
    compare, ComparisonKind, EnsembleComparison, IndexComparison, IndexName, IndexSelection, SummaryRow,
};
pub use indices::{
    aggregate_totals, lagged_interstation_corr, max_dry_run, pct_wet, season_cells, AggregateTotals,
    GroupSummary, Period, Scale, SeasonCell,
};
pub use report::{to_json, to_svg, write_csv, REPORT_FORMAT_VERSION};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvaluateError {
    #[error("ensemble is empty")]
    EmptyEnsemble,
    #[error("replicate {replicate} is not aligned with the observations: {reason}")]
    Alignment { replicate: usize, reason: String },
    #[error("invalid index selection: {0}")]
    InvalidSelection(String),
}

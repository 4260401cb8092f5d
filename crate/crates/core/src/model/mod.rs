//! Calibration of the latent Gaussian occurrence model, one calendar month at a time.
//!
//! Each site-day is wet when a standard normal latent value exceeds a site/month
//! threshold. Thresholds come from observed wet fractions; latent correlations
//! between site `u` on day `t` and site `v` on day `t - k` are found by matching
//! the observed joint wet probability through the bivariate normal CDF. The lag
//! blocks are stacked into a block-Toeplitz correlation matrix which is then
//! repaired to be safely positive definite before simulation.

mod covariance;
mod fit;
mod latent;
mod marginals;
mod persist;
mod truth;

pub use covariance::{
    adjust_sigma_all, assemble_sigma_all, eig_repair, Adjustment, FullCovariance, ADJUST_BRACKET,
};
pub use fit::{fit, fit_with_diagnostics, FitDiagnostics, FitOptions, FittedModel, FrechetWarning, MonthDiagnostics, Provenance};
pub use latent::{
    estimate_joint_prob, estimate_lag_blocks, solve_latent_corr, CorrSolution, LagCorrBlocks,
    CORR_BRACKET,
};
pub use marginals::{estimate_marginals, MonthlyMarginals};
pub use persist::{content_digest, MODEL_FORMAT_VERSION};
pub use truth::TruthSpec;

use std::fmt;

use thiserror::Error;

use crate::numerics::NumericsError;

/// Default eigenvalue floor for the covariance repair.
pub const DEFAULT_EPS2: f64 = 0.05;

/// A single site-month or site-pair cell that could not be estimated.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimationFailure {
    /// All observed days in the site-month are wet (or all dry).
    DegenerateMarginal {
        site: String,
        month: u32,
        wet: u64,
        dry: u64,
    },
    /// No day pair with both members observed.
    NoValidPairs {
        site_u: String,
        site_v: String,
        lag: usize,
        month: u32,
    },
}

impl fmt::Display for EstimationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimationFailure::DegenerateMarginal {
                site,
                month,
                wet,
                dry,
            } => write!(
                f,
                "site {site}, month {month}: degenerate marginal ({wet} wet, {dry} dry days)"
            ),
            EstimationFailure::NoValidPairs {
                site_u,
                site_v,
                lag,
                month,
            } => write!(
                f,
                "sites {site_u}/{site_v}, lag {lag}, month {month}: no valid day pairs"
            ),
        }
    }
}

fn join_failures(failures: &[EstimationFailure]) -> String {
    failures
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("estimation failed: {}", join_failures(.0))]
    Estimation(Vec<EstimationFailure>),
    #[error(
        "covariance adjustment failed for month {month}: eps1 not bracketed in [{lo}, {hi}] \
         (sum of deltas {g_lo} .. {g_hi}, smallest raw eigenvalue {min_eigen})"
    )]
    AdjustmentFailed {
        month: u32,
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
        min_eigen: f64,
    },
    #[error("covariance for month {0} is already adjusted")]
    AlreadyAdjusted(u32),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("model document: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
}

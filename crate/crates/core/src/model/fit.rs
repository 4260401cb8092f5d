use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::data::OccurrenceRecord;
use crate::numerics::{sym_eigen, SymMatrix};

use super::{
    adjust_sigma_all, assemble_sigma_all, estimate_lag_blocks, estimate_marginals, FullCovariance,
    ModelError, MonthlyMarginals, DEFAULT_EPS2,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub max_lag: usize,
    pub eps2: f64,
    /// Threshold the occurrence record was derived with; carried into the model.
    pub wet_threshold_mm: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_lag: 2,
            eps2: DEFAULT_EPS2,
            wet_threshold_mm: 1.0,
        }
    }
}

/// Where a model's parameters came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Calibration period; absent for models written down by hand.
    pub first_date: Option<NaiveDate>,
    pub last_date: Option<NaiveDate>,
    pub n_days: usize,
    /// Digest of the occurrence states the model was fitted to.
    pub source_digest: String,
}

/// Joint wet probability that had to be clamped into its Frechet bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrechetWarning {
    pub month: u32,
    pub lag: usize,
    pub site_u: usize,
    pub site_v: usize,
    pub p_joint: f64,
    pub clamped_to: f64,
}

/// Per-month summary of the covariance repair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonthDiagnostics {
    pub month: u32,
    pub min_eigen_raw: f64,
    pub min_eigen_adjusted: f64,
    pub eps1: f64,
    pub max_abs_delta: f64,
    pub sum_delta: f64,
}

#[derive(Debug, Clone)]
pub struct FitDiagnostics {
    pub months: Vec<MonthDiagnostics>,
    pub frechet_warnings: Vec<FrechetWarning>,
    /// Unadjusted block-Toeplitz matrices, January first.
    pub raw: Vec<SymMatrix>,
}

/// Calibrated model: thresholds plus one block-Toeplitz correlation matrix per month.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub sites: Vec<String>,
    pub max_lag: usize,
    pub wet_threshold_mm: f64,
    pub eps2: f64,
    pub marginals: MonthlyMarginals,
    /// January first.
    pub covariances: Vec<FullCovariance>,
    pub provenance: Provenance,
}

impl FittedModel {
    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    /// Covariance for calendar month `month` (1..=12).
    pub fn covariance(&self, month: u32) -> &FullCovariance {
        &self.covariances[month as usize - 1]
    }

    /// All 12 months present, shapes consistent and every matrix adjusted.
    pub fn is_simulation_ready(&self) -> bool {
        let order = self.n_sites() * (self.max_lag + 1);
        self.covariances.len() == 12
            && self.marginals.n_sites() == self.n_sites()
            && self.covariances.iter().enumerate().all(|(i, c)| {
                c.month as usize == i + 1 && c.is_adjusted() && c.n_sites == self.n_sites() && c.matrix.order() == order
            })
    }
}

struct MonthFit {
    raw: SymMatrix,
    adjusted: FullCovariance,
    warnings: Vec<FrechetWarning>,
    min_eigen_adjusted: f64,
}

fn fit_month(
    occ: &OccurrenceRecord,
    marginals: &MonthlyMarginals,
    month: u32,
    opts: &FitOptions,
) -> Result<MonthFit, ModelError> {
    let (blocks, warnings) = estimate_lag_blocks(occ, marginals, month, opts.max_lag)?;
    let full = assemble_sigma_all(&blocks);
    let adjusted = adjust_sigma_all(&full, opts.eps2)?;
    let min_eigen_adjusted = sym_eigen(&adjusted.matrix)?.values.last().copied().unwrap_or(f64::NAN);
    Ok(MonthFit {
        raw: full.matrix,
        adjusted,
        warnings,
        min_eigen_adjusted,
    })
}

#[cfg(feature = "parallel")]
fn fit_months(occ: &OccurrenceRecord, m: &MonthlyMarginals, opts: &FitOptions) -> Vec<Result<MonthFit, ModelError>> {
    use rayon::prelude::*;
    (1..=12u32).into_par_iter().map(|month| fit_month(occ, m, month, opts)).collect()
}

#[cfg(not(feature = "parallel"))]
fn fit_months(occ: &OccurrenceRecord, m: &MonthlyMarginals, opts: &FitOptions) -> Vec<Result<MonthFit, ModelError>> {
    (1..=12u32).map(|month| fit_month(occ, m, month, opts)).collect()
}

/// Fits the model and returns the per-month repair diagnostics alongside it.
///
/// Estimation failures from every month are gathered into a single error.
pub fn fit_with_diagnostics(
    occ: &OccurrenceRecord,
    opts: &FitOptions,
) -> Result<(FittedModel, FitDiagnostics), ModelError> {
    if !(opts.eps2 > 0.0) {
        return Err(ModelError::InvalidParameter(format!("eps2 must be positive, got {}", opts.eps2)));
    }
    if occ.n_days() == 0 {
        return Err(ModelError::Data(crate::data::DataError::Empty));
    }
    let marginals = estimate_marginals(occ)?;

    let mut failures = Vec::new();
    let mut other = None;
    let mut fits = Vec::with_capacity(12);
    for res in fit_months(occ, &marginals, opts) {
        match res {
            Ok(f) => fits.push(f),
            Err(ModelError::Estimation(mut f)) => failures.append(&mut f),
            Err(e) => {
                other.get_or_insert(e);
            }
        }
    }
    if !failures.is_empty() {
        return Err(ModelError::Estimation(failures));
    }
    if let Some(e) = other {
        return Err(e);
    }

    let mut months = Vec::with_capacity(12);
    let mut raw = Vec::with_capacity(12);
    let mut covariances = Vec::with_capacity(12);
    let mut frechet_warnings = Vec::new();
    for f in fits {
        let adj = f.adjusted.adjustment.expect("adjusted");
        months.push(MonthDiagnostics {
            month: f.adjusted.month,
            min_eigen_raw: adj.min_eigen_raw,
            min_eigen_adjusted: f.min_eigen_adjusted,
            eps1: adj.eps1,
            max_abs_delta: adj.max_abs_delta,
            sum_delta: adj.sum_delta,
        });
        raw.push(f.raw);
        covariances.push(f.adjusted);
        frechet_warnings.extend(f.warnings);
    }

    let cal = occ.calendar();
    let model = FittedModel {
        sites: occ.sites().to_vec(),
        max_lag: opts.max_lag,
        wet_threshold_mm: opts.wet_threshold_mm,
        eps2: opts.eps2,
        marginals,
        covariances,
        provenance: Provenance {
            first_date: Some(cal.start()),
            last_date: Some(cal.date(cal.len() - 1)),
            n_days: cal.len(),
            source_digest: occ.digest(),
        },
    };
    Ok((
        model,
        FitDiagnostics {
            months,
            frechet_warnings,
            raw,
        },
    ))
}

/// Fits thresholds and repaired latent correlation matrices for all 12 months.
pub fn fit(occ: &OccurrenceRecord, opts: &FitOptions) -> Result<FittedModel, ModelError> {
    fit_with_diagnostics(occ, opts).map(|(m, _)| m)
}

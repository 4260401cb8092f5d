use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::numerics::{cholesky, sym_eigen, Matrix};

use super::{
    assemble_sigma_all, content_digest, Adjustment, FittedModel, LagCorrBlocks, ModelError, MonthlyMarginals,
    Provenance, DEFAULT_EPS2,
};

/// Hand-specified model parameters for generating synthetic records.
///
/// By default the lag-0 block is `spatial_corr^|i-j|` and the lag-`k` block is
/// `persistence^k` times it, which is positive definite whenever both
/// parameters lie strictly inside (-1, 1). Wet probabilities follow a cosine
/// seasonal cycle peaking in January, with a linear spread across sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruthSpec {
    pub n_sites: usize,
    /// Optional names; when given they fix the site count and `n_sites` is ignored.
    pub sites: Option<Vec<String>>,
    pub max_lag: usize,
    pub wet_prob_mean: f64,
    pub wet_prob_amplitude: f64,
    pub wet_prob_site_spread: f64,
    pub spatial_corr: f64,
    pub persistence: f64,
    /// Per-site table of 12 monthly wet probabilities; overrides the cosine cycle.
    pub wet_prob_table: Option<Vec<[f64; 12]>>,
    /// Lag blocks `[k][u][v]` used for every month; overrides the separable form.
    pub lag_blocks: Option<Vec<Vec<Vec<f64>>>>,
}

impl Default for TruthSpec {
    fn default() -> Self {
        Self {
            n_sites: 4,
            sites: None,
            max_lag: 2,
            wet_prob_mean: 0.35,
            wet_prob_amplitude: 0.08,
            wet_prob_site_spread: 0.1,
            spatial_corr: 0.7,
            persistence: 0.4,
            wet_prob_table: None,
            lag_blocks: None,
        }
    }
}

fn invalid<T>(msg: String) -> Result<T, ModelError> {
    Err(ModelError::InvalidParameter(msg))
}

impl TruthSpec {
    pub fn site_names(&self) -> Vec<String> {
        match &self.sites {
            Some(names) => names.clone(),
            None => (1..=self.n_sites).map(|i| format!("S{i:02}")).collect(),
        }
    }

    fn probabilities(&self) -> Vec<[f64; 12]> {
        if let Some(t) = &self.wet_prob_table {
            return t.clone();
        }
        let s = self.site_names().len();
        (0..s)
            .map(|i| {
                let offset = if s > 1 { i as f64 / (s - 1) as f64 - 0.5 } else { 0.0 };
                std::array::from_fn(|m| {
                    self.wet_prob_mean
                        + self.wet_prob_amplitude * (2.0 * PI * m as f64 / 12.0).cos()
                        + self.wet_prob_site_spread * offset
                })
            })
            .collect()
    }

    fn blocks(&self) -> Result<Vec<Matrix>, ModelError> {
        if let Some(b) = &self.lag_blocks {
            return b
                .iter()
                .map(|rows| Matrix::from_rows(rows).map_err(ModelError::from))
                .collect();
        }
        let s = self.site_names().len();
        let (c, phi) = (self.spatial_corr, self.persistence);
        Ok((0..=self.max_lag)
            .map(|k| {
                let mut b = Matrix::zeros(s, s);
                for u in 0..s {
                    for v in 0..s {
                        b.set(u, v, phi.powi(k as i32) * c.powi(u.abs_diff(v) as i32));
                    }
                }
                b
            })
            .collect())
    }

    /// Validates the parameters and builds a simulation-ready model.
    pub fn to_model(&self) -> Result<FittedModel, ModelError> {
        let sites = self.site_names();
        let s = sites.len();
        if s == 0 {
            return invalid("truth needs at least one site".into());
        }
        for (name, v) in [("spatial_corr", self.spatial_corr), ("persistence", self.persistence)] {
            if !(-1.0..=1.0).contains(&v) {
                return invalid(format!("{name} = {v} outside [-1, 1]"));
            }
        }
        let probs = self.probabilities();
        if probs.len() != s {
            return invalid(format!("wet_prob_table has {} rows for {s} sites", probs.len()));
        }
        let marginals = MonthlyMarginals::from_probabilities(&probs, None)?;

        let blocks = self.blocks()?;
        if blocks.is_empty() || blocks.iter().any(|b| b.rows() != s || b.cols() != s) {
            return invalid(format!("lag_blocks must be a non-empty list of {s} x {s} matrices"));
        }
        let max_lag = blocks.len() - 1;
        for (k, b) in blocks.iter().enumerate() {
            for u in 0..s {
                for v in 0..s {
                    let x = b.get(u, v);
                    if !(-1.0..=1.0).contains(&x) {
                        return invalid(format!("lag {k} correlation ({u}, {v}) = {x} outside [-1, 1]"));
                    }
                    if k == 0 && ((u == v && x != 1.0) || b.get(v, u) != x) {
                        return invalid("lag-0 block must be symmetric with unit diagonal".into());
                    }
                }
            }
        }

        let mut covariances = Vec::with_capacity(12);
        for month in 1..=12u32 {
            let mut cov = assemble_sigma_all(&LagCorrBlocks {
                month,
                blocks: blocks.clone(),
            });
            if cholesky(&cov.matrix).is_err() {
                return invalid("truth correlation structure is not positive definite".into());
            }
            let min_eigen = sym_eigen(&cov.matrix)?.values.last().copied().unwrap_or(f64::NAN);
            cov.adjustment = Some(Adjustment {
                eps1: 0.0,
                eps2: DEFAULT_EPS2,
                min_eigen_raw: min_eigen,
                max_abs_delta: 0.0,
                sum_delta: 0.0,
            });
            covariances.push(cov);
        }

        let spec_json = serde_json::to_string(self)?;
        Ok(FittedModel {
            sites,
            max_lag,
            wet_threshold_mm: 1.0,
            eps2: DEFAULT_EPS2,
            marginals,
            covariances,
            provenance: Provenance {
                first_date: None,
                last_date: None,
                n_days: 0,
                source_digest: content_digest(spec_json.as_bytes()),
            },
        })
    }
}

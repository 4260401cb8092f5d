//! JSON model document.
//!
//! Floats are written in shortest round-trip form, so a reload reproduces every
//! value bit for bit.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::hex_digest;
use crate::numerics::SymMatrix;

use super::{Adjustment, FittedModel, FullCovariance, ModelError, MonthlyMarginals, Provenance};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const FORMAT_NAME: &str = "latgen-model";

#[derive(Serialize, Deserialize)]
struct MonthDoc {
    month: u32,
    p_hat: Vec<f64>,
    c_hat: Vec<f64>,
    n_obs: Vec<u64>,
    /// Row-major rows of the block-Toeplitz matrix.
    sigma_all: Vec<Vec<f64>>,
    adjustment: Option<Adjustment>,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    format: String,
    format_version: u32,
    sites: Vec<String>,
    max_lag: usize,
    wet_threshold_mm: f64,
    eps2: f64,
    provenance: Provenance,
    months: Vec<MonthDoc>,
}

/// `sha256:<hex>` of arbitrary bytes, used to pin model files.
pub fn content_digest(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    hex_digest(h)
}

impl FittedModel {
    pub fn to_json(&self) -> Result<String, ModelError> {
        let s = self.n_sites();
        let months = self
            .covariances
            .iter()
            .map(|cov| {
                let m = cov.month;
                let n = cov.matrix.order();
                MonthDoc {
                    month: m,
                    p_hat: (0..s).map(|i| self.marginals.p(i, m)).collect(),
                    c_hat: (0..s).map(|i| self.marginals.c(i, m)).collect(),
                    n_obs: (0..s).map(|i| self.marginals.n(i, m)).collect(),
                    sigma_all: (0..n).map(|i| (0..n).map(|j| cov.matrix.get(i, j)).collect()).collect(),
                    adjustment: cov.adjustment,
                }
            })
            .collect();
        let doc = ModelDoc {
            format: FORMAT_NAME.into(),
            format_version: MODEL_FORMAT_VERSION,
            sites: self.sites.clone(),
            max_lag: self.max_lag,
            wet_threshold_mm: self.wet_threshold_mm,
            eps2: self.eps2,
            provenance: self.provenance.clone(),
            months,
        };
        let mut out = serde_json::to_string_pretty(&doc)?;
        out.push('\n');
        Ok(out)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let doc: ModelDoc = serde_json::from_str(text)?;
        let bad = |msg: String| Err(ModelError::Format(msg));
        if doc.format != FORMAT_NAME {
            return bad(format!("unexpected format {:?}", doc.format));
        }
        if doc.format_version != MODEL_FORMAT_VERSION {
            return bad(format!("unsupported format_version {}", doc.format_version));
        }
        let s = doc.sites.len();
        if s == 0 {
            return bad("no sites".into());
        }
        if doc.months.len() != 12 {
            return bad(format!("expected 12 months, found {}", doc.months.len()));
        }
        let order = s * (doc.max_lag + 1);
        let mut p_hat = vec![0.0; s * 12];
        let mut c_hat = vec![0.0; s * 12];
        let mut n_obs = vec![0u64; s * 12];
        let mut covariances = Vec::with_capacity(12);
        for (i, m) in doc.months.into_iter().enumerate() {
            if m.month as usize != i + 1 {
                return bad(format!("month entries out of order at position {}", i + 1));
            }
            if m.p_hat.len() != s || m.c_hat.len() != s || m.n_obs.len() != s {
                return bad(format!("month {}: marginal arrays must have {s} entries", m.month));
            }
            for site in 0..s {
                let p = m.p_hat[site];
                if !(p > 0.0 && p < 1.0) || !m.c_hat[site].is_finite() {
                    return bad(format!("month {}, site {}: invalid marginal", m.month, doc.sites[site]));
                }
                p_hat[site * 12 + i] = p;
                c_hat[site * 12 + i] = m.c_hat[site];
                n_obs[site * 12 + i] = m.n_obs[site];
            }
            if m.sigma_all.len() != order || m.sigma_all.iter().any(|r| r.len() != order) {
                return bad(format!("month {}: sigma_all must be {order} x {order}", m.month));
            }
            let matrix = SymMatrix::from_rows(&m.sigma_all)
                .map_err(|e| ModelError::Format(format!("month {}: {e}", m.month)))?;
            if !matrix.is_finite() {
                return bad(format!("month {}: non-finite sigma_all entry", m.month));
            }
            covariances.push(FullCovariance {
                month: m.month,
                n_sites: s,
                matrix,
                adjustment: m.adjustment,
            });
        }
        Ok(FittedModel {
            sites: doc.sites,
            max_lag: doc.max_lag,
            wet_threshold_mm: doc.wet_threshold_mm,
            eps2: doc.eps2,
            marginals: MonthlyMarginals::from_raw(s, p_hat, c_hat, n_obs),
            covariances,
            provenance: doc.provenance,
        })
    }
}

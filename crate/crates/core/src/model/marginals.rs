use crate::data::{Occurrence, OccurrenceRecord};
use crate::numerics::phi_inv;

use super::{EstimationFailure, ModelError};

/// Per-site, per-calendar-month wet probabilities and latent thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyMarginals {
    n_sites: usize,
    // Indexed [site * 12 + month - 1].
    p_hat: Vec<f64>,
    c_hat: Vec<f64>,
    n_obs: Vec<u64>,
}

impl MonthlyMarginals {
    /// From per-site tables of 12 monthly wet probabilities, each in (0, 1).
    pub fn from_probabilities(p: &[[f64; 12]], n_obs: Option<&[[u64; 12]]>) -> Result<Self, ModelError> {
        let mut p_hat = Vec::with_capacity(p.len() * 12);
        for (site, row) in p.iter().enumerate() {
            for (m, &v) in row.iter().enumerate() {
                if !(v > 0.0 && v < 1.0) {
                    return Err(ModelError::InvalidParameter(format!(
                        "wet probability {v} for site {site}, month {} outside (0, 1)",
                        m + 1
                    )));
                }
                p_hat.push(v);
            }
        }
        let c_hat = p_hat.iter().map(|&p| phi_inv(1.0 - p)).collect();
        let n_obs = match n_obs {
            Some(n) => n.iter().flat_map(|r| r.iter().copied()).collect(),
            None => vec![0; p_hat.len()],
        };
        Ok(Self {
            n_sites: p.len(),
            p_hat,
            c_hat,
            n_obs,
        })
    }

    pub(crate) fn from_raw(n_sites: usize, p_hat: Vec<f64>, c_hat: Vec<f64>, n_obs: Vec<u64>) -> Self {
        Self {
            n_sites,
            p_hat,
            c_hat,
            n_obs,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    #[inline]
    pub fn p(&self, site: usize, month: u32) -> f64 {
        self.p_hat[site * 12 + month as usize - 1]
    }

    #[inline]
    pub fn c(&self, site: usize, month: u32) -> f64 {
        self.c_hat[site * 12 + month as usize - 1]
    }

    /// Number of non-missing days behind `p(site, month)`; 0 for prescribed values.
    pub fn n(&self, site: usize, month: u32) -> u64 {
        self.n_obs[site * 12 + month as usize - 1]
    }

    /// Thresholds of all sites for one month.
    pub fn thresholds(&self, month: u32) -> Vec<f64> {
        (0..self.n_sites).map(|s| self.c(s, month)).collect()
    }
}

/// Wet fraction over non-missing days and its normal threshold, per site and month.
pub fn estimate_marginals(occ: &OccurrenceRecord) -> Result<MonthlyMarginals, ModelError> {
    let s = occ.n_sites();
    let mut wet = vec![0u64; s * 12];
    let mut dry = vec![0u64; s * 12];
    let cal = occ.calendar();
    for t in 0..occ.n_days() {
        let m = cal.month(t) as usize - 1;
        for (site, state) in occ.day(t).iter().enumerate() {
            match state {
                Occurrence::Wet => wet[site * 12 + m] += 1,
                Occurrence::Dry => dry[site * 12 + m] += 1,
                Occurrence::Missing => {}
            }
        }
    }
    let mut failures = Vec::new();
    let mut p_hat = vec![0.0; s * 12];
    let mut c_hat = vec![0.0; s * 12];
    let mut n_obs = vec![0u64; s * 12];
    for site in 0..s {
        for m in 0..12 {
            let i = site * 12 + m;
            let (w, d) = (wet[i], dry[i]);
            if w == 0 || d == 0 {
                failures.push(EstimationFailure::DegenerateMarginal {
                    site: occ.sites()[site].clone(),
                    month: m as u32 + 1,
                    wet: w,
                    dry: d,
                });
                continue;
            }
            let p = w as f64 / (w + d) as f64;
            p_hat[i] = p;
            c_hat[i] = phi_inv(1.0 - p);
            n_obs[i] = w + d;
        }
    }
    if !failures.is_empty() {
        return Err(ModelError::Estimation(failures));
    }
    Ok(MonthlyMarginals {
        n_sites: s,
        p_hat,
        c_hat,
        n_obs,
    })
}

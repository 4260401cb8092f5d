use crate::data::{month_indices, Occurrence, OccurrenceRecord};
use crate::numerics::{bvn_lower, find_root, Matrix};

use super::{EstimationFailure, FrechetWarning, ModelError, MonthlyMarginals};

/// Search interval for latent correlations.
pub const CORR_BRACKET: (f64, f64) = (-1.0 + 1e-12, 1.0 - 1e-12);

const FRECHET_SLACK: f64 = 1e-9;
const CORR_XTOL: f64 = 1e-14;

/// Lag-0..r latent correlation blocks of one calendar month.
///
/// `blocks[k][(u, v)]` is the correlation between site `u` on day `t` and site
/// `v` on day `t - k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagCorrBlocks {
    pub month: u32,
    pub blocks: Vec<Matrix>,
}

impl LagCorrBlocks {
    pub fn max_lag(&self) -> usize {
        self.blocks.len().saturating_sub(1)
    }

    pub fn n_sites(&self) -> usize {
        self.blocks.first().map_or(0, Matrix::rows)
    }
}

/// Result of inverting the bivariate normal joint-probability map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrSolution {
    pub rho: f64,
    /// Distance by which the joint probability fell outside its Frechet bounds
    /// before clamping; zero when consistent.
    pub frechet_excess: f64,
    pub p_joint_used: f64,
}

/// Counts `(both wet, valid pairs)` for day `t` in `indices` paired with `t - lag`.
fn joint_counts(occ: &OccurrenceRecord, indices: &[usize], u: usize, v: usize, lag: usize) -> (u64, u64) {
    let mut both = 0u64;
    let mut valid = 0u64;
    for &t in indices {
        if t < lag {
            continue;
        }
        let (a, b) = (occ.state(t, u), occ.state(t - lag, v));
        if a.is_missing() || b.is_missing() {
            continue;
        }
        valid += 1;
        if a == Occurrence::Wet && b == Occurrence::Wet {
            both += 1;
        }
    }
    (both, valid)
}

/// Fraction of valid `(t, t - lag)` day pairs, `t` in `month`, with both sites wet.
///
/// Day `t - lag` may fall in the previous month. Pairs with a missing member are
/// dropped from numerator and denominator.
pub fn estimate_joint_prob(
    occ: &OccurrenceRecord,
    u: usize,
    v: usize,
    lag: usize,
    month: u32,
) -> Result<f64, ModelError> {
    let indices = month_indices(occ.calendar(), month)?;
    let (both, valid) = joint_counts(occ, &indices, u, v, lag);
    if valid == 0 {
        return Err(ModelError::Estimation(vec![EstimationFailure::NoValidPairs {
            site_u: occ.sites()[u].clone(),
            site_v: occ.sites()[v].clone(),
            lag,
            month,
        }]));
    }
    Ok(both as f64 / valid as f64)
}

/// Latent correlation `rho` with `Phi2(c_u, c_v | rho) = 1 - p_u - p_v + p_joint`.
///
/// `p_joint` is first clamped into its Frechet bounds; the forward map is
/// strictly increasing in `rho`, so the root is unique. Targets beyond what the
/// bracket can reach return the nearest bracket end.
pub fn solve_latent_corr(
    c_u: f64,
    c_v: f64,
    p_u: f64,
    p_v: f64,
    p_joint: f64,
) -> Result<CorrSolution, ModelError> {
    for (name, p) in [("p_u", p_u), ("p_v", p_v)] {
        if !(p > 0.0 && p < 1.0) {
            return Err(ModelError::InvalidParameter(format!("{name} = {p} outside (0, 1)")));
        }
    }
    if !p_joint.is_finite() || !c_u.is_finite() || !c_v.is_finite() {
        return Err(ModelError::InvalidParameter("non-finite input to solve_latent_corr".into()));
    }
    let lower = (p_u + p_v - 1.0).max(0.0);
    let upper = p_u.min(p_v);
    let clamped = p_joint.clamp(lower, upper);
    let excess = (p_joint - clamped).abs();

    let target = 1.0 - p_u - p_v + clamped;
    let (lo, hi) = CORR_BRACKET;
    let f = |rho: f64| bvn_lower(c_u, c_v, rho) - target;
    let rho = if f(lo) >= 0.0 {
        lo
    } else if f(hi) <= 0.0 {
        hi
    } else {
        find_root(f, lo, hi, CORR_XTOL)?
    };
    Ok(CorrSolution {
        rho,
        frechet_excess: excess,
        p_joint_used: clamped,
    })
}

/// Estimates lag blocks 0..=`max_lag` for one month.
///
/// The lag-0 diagonal is fixed at one and lag-0 entries are computed once per
/// unordered pair. Failures for every cell are collected before returning.
pub fn estimate_lag_blocks(
    occ: &OccurrenceRecord,
    marginals: &MonthlyMarginals,
    month: u32,
    max_lag: usize,
) -> Result<(LagCorrBlocks, Vec<FrechetWarning>), ModelError> {
    let s = occ.n_sites();
    let indices = month_indices(occ.calendar(), month)?;
    let mut blocks = Vec::with_capacity(max_lag + 1);
    let mut warnings = Vec::new();
    let mut failures = Vec::new();
    for lag in 0..=max_lag {
        let mut block = Matrix::zeros(s, s);
        for u in 0..s {
            for v in 0..s {
                if lag == 0 && u == v {
                    block.set(u, v, 1.0);
                    continue;
                }
                if lag == 0 && v < u {
                    block.set(u, v, block.get(v, u));
                    continue;
                }
                let (both, valid) = joint_counts(occ, &indices, u, v, lag);
                if valid == 0 {
                    failures.push(EstimationFailure::NoValidPairs {
                        site_u: occ.sites()[u].clone(),
                        site_v: occ.sites()[v].clone(),
                        lag,
                        month,
                    });
                    continue;
                }
                let p_joint = both as f64 / valid as f64;
                let (p_u, p_v) = (marginals.p(u, month), marginals.p(v, month));
                let sol = solve_latent_corr(marginals.c(u, month), marginals.c(v, month), p_u, p_v, p_joint)?;
                if sol.frechet_excess > FRECHET_SLACK {
                    warnings.push(FrechetWarning {
                        month,
                        lag,
                        site_u: u,
                        site_v: v,
                        p_joint,
                        clamped_to: sol.p_joint_used,
                    });
                }
                block.set(u, v, sol.rho);
            }
        }
        blocks.push(block);
    }
    if !failures.is_empty() {
        return Err(ModelError::Estimation(failures));
    }
    Ok((LagCorrBlocks { month, blocks }, warnings))
}

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::numerics::{find_root, sym_eigen, Matrix, NumericsError, SymMatrix};

use super::{LagCorrBlocks, ModelError};

/// Search interval for the off-diagonal shift `eps1`.
pub const ADJUST_BRACKET: (f64, f64) = (-0.5, 0.5);

const EPS1_XTOL: f64 = 1e-15;
const ZERO_MEAN_TOL: f64 = 1e-8;

/// What the eigenvalue repair did to one month's matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adjustment {
    pub eps1: f64,
    pub eps2: f64,
    /// Smallest eigenvalue before repair.
    pub min_eigen_raw: f64,
    /// Largest elementwise |adjusted - raw|.
    pub max_abs_delta: f64,
    /// Sum of elementwise (adjusted - raw); zero up to solver tolerance.
    pub sum_delta: f64,
}

/// Block-Toeplitz latent correlation matrix of order `s (r + 1)`.
///
/// Blocks are ordered most-recent-first: block `(i, j)` with `i <= j` is the
/// lag `j - i` block and block `(j, i)` its transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct FullCovariance {
    pub month: u32,
    pub n_sites: usize,
    pub matrix: SymMatrix,
    pub adjustment: Option<Adjustment>,
}

impl FullCovariance {
    pub fn is_adjusted(&self) -> bool {
        self.adjustment.is_some()
    }

    pub fn max_lag(&self) -> usize {
        self.matrix.order() / self.n_sites - 1
    }

    /// The `s x s` block at block position `(i, j)`.
    pub fn block(&self, i: usize, j: usize) -> Matrix {
        let s = self.n_sites;
        let mut b = Matrix::zeros(s, s);
        for a in 0..s {
            for c in 0..s {
                b.set(a, c, self.matrix.get(i * s + a, j * s + c));
            }
        }
        b
    }

    /// Lag-`k` block, read from the first block row.
    pub fn lag_block(&self, k: usize) -> Matrix {
        self.block(0, k)
    }

    pub fn lag_blocks(&self) -> LagCorrBlocks {
        LagCorrBlocks {
            month: self.month,
            blocks: (0..=self.max_lag()).map(|k| self.lag_block(k)).collect(),
        }
    }
}

/// Stacks lag blocks into the block-Toeplitz matrix (unadjusted).
pub fn assemble_sigma_all(blocks: &LagCorrBlocks) -> FullCovariance {
    let s = blocks.n_sites();
    let n = s * blocks.blocks.len();
    // Upper triangle: p = (i, a) <= q = (j, b) implies i <= j.
    let matrix = SymMatrix::from_fn(n, |p, q| {
        let (i, a) = (p / s, p % s);
        let (j, b) = (q / s, q % s);
        blocks.blocks[j - i].get(a, b)
    });
    FullCovariance {
        month: blocks.month,
        n_sites: s,
        matrix,
        adjustment: None,
    }
}

/// Eigenvalue repair of a unit-diagonal symmetric matrix.
///
/// Adds `eps1` to every off-diagonal entry, floors the eigenvalues of the result
/// at `eps2`, reconstructs, and rescales to unit diagonal.
pub fn eig_repair(m: &SymMatrix, eps1: f64, eps2: f64) -> Result<SymMatrix, ModelError> {
    if !(eps2 > 0.0) || !eps1.is_finite() {
        return Err(ModelError::InvalidParameter(format!(
            "eig_repair needs finite eps1 and eps2 > 0 (got {eps1}, {eps2})"
        )));
    }
    let n = m.order();
    let shifted = SymMatrix::from_fn(n, |i, j| if i == j { m.get(i, j) } else { m.get(i, j) + eps1 });
    let eig = sym_eigen(&shifted)?;
    let floored: Vec<f64> = eig.values.iter().map(|&l| l.max(eps2)).collect();
    let r = eig.reconstruct_with(&floored);
    let scale: Vec<f64> = (0..n).map(|i| 1.0 / r.get(i, i).sqrt()).collect();
    Ok(SymMatrix::from_fn(n, |i, j| {
        if i == j {
            1.0
        } else {
            scale[i] * r.get(i, j) * scale[j]
        }
    }))
}

fn sum_delta(a: &SymMatrix, b: &SymMatrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x - y).sum()
}

/// Repairs `cov` with eigenvalue floor `eps2`, choosing `eps1` so that the
/// adjusted matrix has the same entry sum as the raw one.
pub fn adjust_sigma_all(cov: &FullCovariance, eps2: f64) -> Result<FullCovariance, ModelError> {
    if cov.is_adjusted() {
        return Err(ModelError::AlreadyAdjusted(cov.month));
    }
    if !(eps2 > 0.0) {
        return Err(ModelError::InvalidParameter(format!("eps2 must be positive, got {eps2}")));
    }
    let raw = &cov.matrix;
    let min_eigen_raw = sym_eigen(raw)?.values.last().copied().unwrap_or(f64::NAN);

    let failure: RefCell<Option<ModelError>> = RefCell::new(None);
    let g = |eps1: f64| match eig_repair(raw, eps1, eps2) {
        Ok(adj) => sum_delta(&adj, raw),
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let (lo, hi) = ADJUST_BRACKET;
    let root = find_root(g, lo, hi, EPS1_XTOL);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let eps1 = match root {
        Ok(x) => x,
        Err(NumericsError::NotBracketed { f_lo, f_hi, .. }) => {
            return Err(ModelError::AdjustmentFailed {
                month: cov.month,
                lo,
                hi,
                g_lo: f_lo,
                g_hi: f_hi,
                min_eigen: min_eigen_raw,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let adjusted = eig_repair(raw, eps1, eps2)?;
    let total = sum_delta(&adjusted, raw);
    if total.abs() > ZERO_MEAN_TOL {
        return Err(ModelError::AdjustmentFailed {
            month: cov.month,
            lo,
            hi,
            g_lo: total,
            g_hi: total,
            min_eigen: min_eigen_raw,
        });
    }
    Ok(FullCovariance {
        month: cov.month,
        n_sites: cov.n_sites,
        adjustment: Some(Adjustment {
            eps1,
            eps2,
            min_eigen_raw,
            max_abs_delta: adjusted.max_abs_diff(raw),
            sum_delta: total,
        }),
        matrix: adjusted,
    })
}

//! Numerical kernels used by calibration and simulation.
//!
//! Everything here is a pure function of its inputs. Random draws go through
//! an explicit [`RngStream`] so that callers control reproducibility.

mod bivariate;
mod linalg;
mod mvn;
mod normal;
mod rng;
mod root;

pub use bivariate::bivariate_normal_cdf;
pub use linalg::{cholesky, sym_eigen, EigenPair, Matrix, SymMatrix};
pub use mvn::{mvn_sample, MvnSampler};
pub use normal::{std_normal_cdf, std_normal_quantile};
pub use rng::RngStream;
pub use root::find_root;

pub(crate) use bivariate::bvn_lower;
pub(crate) use linalg::{cholesky_solve_in_place, lower_mul_vec};
pub(crate) use normal::phi_inv;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("non-finite input to {0}")]
    NonFinite(&'static str),
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },
    #[error("root not bracketed: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    NotBracketed {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("matrix not positive definite (pivot {pivot}, value {value})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("{0} did not converge")]
    NoConvergence(&'static str),
}

pub type Result<T, E = NumericsError> = std::result::Result<T, E>;

use super::linalg::{cholesky, lower_mul_vec, Matrix, SymMatrix};
use super::{NumericsError, Result, RngStream};

/// Multivariate normal sampler with a cached Cholesky factor.
#[derive(Debug, Clone)]
pub struct MvnSampler {
    mean: Vec<f64>,
    factor: Matrix,
}

impl MvnSampler {
    pub fn new(mean: Vec<f64>, cov: &SymMatrix) -> Result<Self> {
        if mean.len() != cov.order() {
            return Err(NumericsError::DimensionMismatch {
                expected: cov.order(),
                got: mean.len(),
            });
        }
        let factor = cholesky(cov)?;
        Ok(Self { mean, factor })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn factor(&self) -> &Matrix {
        &self.factor
    }

    /// Writes one draw into `out`; `scratch` must have the same length.
    pub fn sample_into(&self, rng: &mut RngStream, scratch: &mut [f64], out: &mut [f64]) {
        rng.fill_standard_normal(scratch);
        lower_mul_vec(&self.factor, scratch, out);
        for (o, m) in out.iter_mut().zip(&self.mean) {
            *o += m;
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        let mut z = vec![0.0; self.dim()];
        let mut out = vec![0.0; self.dim()];
        self.sample_into(rng, &mut z, &mut out);
        out
    }
}

/// One draw from `N(mean, cov)`.
pub fn mvn_sample(mean: &[f64], cov: &SymMatrix, rng: &mut RngStream) -> Result<Vec<f64>> {
    Ok(MvnSampler::new(mean.to_vec(), cov)?.sample(rng))
}

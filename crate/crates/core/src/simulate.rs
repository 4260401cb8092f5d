//! Synthetic occurrence sequences from a fitted model.
//!
//! The first `r + 1` days are one joint draw from the start month's
//! block-Toeplitz matrix. Every later day is drawn from the Gaussian
//! conditional on the previous `r` latent vectors, using the blocks of the
//! current day's month, and thresholded against that month's cut levels.

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Calendar, DataError, Occurrence, OccurrenceRecord};
use crate::model::FittedModel;
use crate::numerics::{cholesky, cholesky_solve_in_place, lower_mul_vec, Matrix, MvnSampler, NumericsError, RngStream, SymMatrix};

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("model is not ready for simulation: {0}")]
    NotReady(String),
    #[error("conditional covariance for month {month} is not positive definite")]
    ConditionalDegenerate { month: u32 },
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("replicate {id}: {source}")]
    Replicate {
        id: u64,
        #[source]
        source: Box<SimulateError>,
    },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub n_replicates: usize,
    pub base_seed: u64,
}

impl SimulationConfig {
    pub fn validate(&self, max_lag: usize) -> Result<(), SimulateError> {
        if self.n_replicates == 0 {
            return Err(SimulateError::InvalidConfig("n_replicates must be positive".into()));
        }
        if self.end < self.start + Duration::days(max_lag as i64) {
            return Err(SimulateError::InvalidConfig(format!(
                "period {}..{} is shorter than the {} days of the initial block",
                self.start,
                self.end,
                max_lag + 1
            )));
        }
        Ok(())
    }
}

/// The last `r` latent vectors, most recent first.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    pub history: Vec<Vec<f64>>,
}

/// Per-month quantities derived once from the model.
#[derive(Debug, Clone)]
struct MonthPlan {
    init: MvnSampler,
    /// `s x s r` coefficients of the conditional mean.
    coef: Matrix,
    cond_cov: SymMatrix,
    cond_factor: Matrix,
    thresholds: Vec<f64>,
}

fn month_plan(model: &FittedModel, month: u32) -> Result<MonthPlan, SimulateError> {
    let s = model.n_sites();
    let r = model.max_lag;
    let cov = &model.covariance(month).matrix;
    let init = MvnSampler::new(vec![0.0; cov.order()], cov)?;

    let sigma0 = SymMatrix::from_fn(s, |a, b| cov.get(a, b));
    let (coef, cond_cov) = if r == 0 {
        (Matrix::zeros(s, 0), sigma0)
    } else {
        let h = s * r;
        let sigma22 = SymMatrix::from_fn(h, |i, j| cov.get(s + i, s + j));
        let l22 = cholesky(&sigma22)?;
        let mut coef = Matrix::zeros(s, h);
        for a in 0..s {
            let mut row: Vec<f64> = (0..h).map(|j| cov.get(a, s + j)).collect();
            cholesky_solve_in_place(&l22, &mut row);
            for (j, v) in row.into_iter().enumerate() {
                coef.set(a, j, v);
            }
        }
        let mut schur = Matrix::zeros(s, s);
        for a in 0..s {
            for b in 0..s {
                let proj: f64 = (0..h).map(|j| coef.get(a, j) * cov.get(b, s + j)).sum();
                schur.set(a, b, cov.get(a, b) - proj);
            }
        }
        (coef, SymMatrix::symmetrize(&schur))
    };
    let cond_factor = match cholesky(&cond_cov) {
        Ok(l) => l,
        Err(NumericsError::NotPositiveDefinite { .. }) => return Err(SimulateError::ConditionalDegenerate { month }),
        Err(e) => return Err(e.into()),
    };
    Ok(MonthPlan {
        init,
        coef,
        cond_cov,
        cond_factor,
        thresholds: model.marginals.thresholds(month),
    })
}

/// A model prepared for simulation: all per-month factorizations cached.
#[derive(Debug, Clone)]
pub struct Simulator {
    sites: Vec<String>,
    max_lag: usize,
    plans: Vec<MonthPlan>,
}

impl Simulator {
    pub fn new(model: &FittedModel) -> Result<Self, SimulateError> {
        if !model.is_simulation_ready() {
            return Err(SimulateError::NotReady(
                "expected 12 adjusted covariance matrices matching the site count and lag".into(),
            ));
        }
        let plans = (1..=12).map(|m| month_plan(model, m)).collect::<Result<_, _>>()?;
        Ok(Self {
            sites: model.sites.clone(),
            max_lag: model.max_lag,
            plans,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    fn plan(&self, month: u32) -> &MonthPlan {
        &self.plans[month as usize - 1]
    }

    /// Conditional mean coefficients and conditional covariance for `month`.
    pub fn conditional(&self, month: u32) -> (&Matrix, &SymMatrix) {
        let p = self.plan(month);
        (&p.coef, &p.cond_cov)
    }

    /// One unconditional draw of `r + 1` latent vectors, oldest first.
    pub fn init_block(&self, month: u32, rng: &mut RngStream) -> Vec<Vec<f64>> {
        let s = self.n_sites();
        let r = self.max_lag;
        let stacked = self.plan(month).init.sample(rng);
        // Stacked most-recent-first; day j (oldest = 0) is block r - j.
        (0..=r).map(|j| stacked[(r - j) * s..(r - j + 1) * s].to_vec()).collect()
    }

    /// Draws the next latent vector given the history, most recent first.
    pub fn cond_step(&self, month: u32, state: &LatentState, rng: &mut RngStream) -> Result<Vec<f64>, SimulateError> {
        let s = self.n_sites();
        if state.history.len() != self.max_lag || state.history.iter().any(|z| z.len() != s) {
            return Err(SimulateError::InvalidConfig(format!(
                "latent history must hold {} vectors of length {s}",
                self.max_lag
            )));
        }
        if state.history.iter().flatten().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite("latent history").into());
        }
        let flat: Vec<f64> = state.history.concat();
        let mut out = vec![0.0; s];
        let mut noise = vec![0.0; s];
        let mut scratch = vec![0.0; s];
        self.step_into(self.plan(month), &flat, rng, &mut noise, &mut scratch, &mut out);
        Ok(out)
    }

    #[inline]
    fn step_into(
        &self,
        plan: &MonthPlan,
        history: &[f64],
        rng: &mut RngStream,
        noise: &mut [f64],
        scratch: &mut [f64],
        out: &mut [f64],
    ) {
        rng.fill_standard_normal(noise);
        lower_mul_vec(&plan.cond_factor, noise, scratch);
        for (a, o) in out.iter_mut().enumerate() {
            let row = plan.coef.row(a);
            let mean: f64 = row.iter().zip(history).map(|(c, z)| c * z).sum();
            *o = mean + scratch[a];
        }
    }

    /// Simulates `[start, end]` and returns the record together with all latent
    /// values (`latents[t * s + site]`).
    pub fn run_with_latents(
        &self,
        start: NaiveDate,
        end: NaiveDate,
        rng: &mut RngStream,
    ) -> Result<(OccurrenceRecord, Vec<f64>), SimulateError> {
        let cal = Calendar::span(start, end);
        let s = self.n_sites();
        let r = self.max_lag;
        let n = cal.len();
        if n < r + 1 {
            return Err(SimulateError::InvalidConfig(format!(
                "{n} days cannot hold the {}-day initial block",
                r + 1
            )));
        }
        let mut z = vec![0.0; n * s];
        for (j, day) in self.init_block(cal.month(0), rng).into_iter().enumerate() {
            z[j * s..(j + 1) * s].copy_from_slice(&day);
        }
        let mut history = vec![0.0; r * s];
        let mut noise = vec![0.0; s];
        let mut scratch = vec![0.0; s];
        let mut out = vec![0.0; s];
        for t in (r + 1)..n {
            for k in 1..=r {
                history[(k - 1) * s..k * s].copy_from_slice(&z[(t - k) * s..(t - k + 1) * s]);
            }
            let plan = self.plan(cal.month(t));
            self.step_into(plan, &history, rng, &mut noise, &mut scratch, &mut out);
            z[t * s..(t + 1) * s].copy_from_slice(&out);
        }
        let mut states = Vec::with_capacity(n * s);
        for t in 0..n {
            let c = &self.plan(cal.month(t)).thresholds;
            for site in 0..s {
                states.push(if z[t * s + site] > c[site] {
                    Occurrence::Wet
                } else {
                    Occurrence::Dry
                });
            }
        }
        Ok((OccurrenceRecord::new(cal, self.sites.clone(), states)?, z))
    }

    pub fn run(&self, start: NaiveDate, end: NaiveDate, rng: &mut RngStream) -> Result<OccurrenceRecord, SimulateError> {
        self.run_with_latents(start, end, rng).map(|(occ, _)| occ)
    }

    /// Replicate `replicate_id` of `config`, on its own random stream.
    pub fn replicate(&self, config: &SimulationConfig, replicate_id: u64) -> Result<OccurrenceRecord, SimulateError> {
        let mut rng = RngStream::new(config.base_seed, replicate_id);
        self.run(config.start, config.end, &mut rng)
    }
}

/// One unconditional block of `r + 1` latent vectors, oldest first.
pub fn init_block(model: &FittedModel, month: u32, rng: &mut RngStream) -> Result<Vec<Vec<f64>>, SimulateError> {
    check_month(month)?;
    Ok(Simulator::new(model)?.init_block(month, rng))
}

/// One conditional step given the last `r` latent vectors.
pub fn cond_step(
    model: &FittedModel,
    month: u32,
    state: &LatentState,
    rng: &mut RngStream,
) -> Result<Vec<f64>, SimulateError> {
    check_month(month)?;
    Simulator::new(model)?.cond_step(month, state, rng)
}

fn check_month(month: u32) -> Result<(), SimulateError> {
    if (1..=12).contains(&month) {
        Ok(())
    } else {
        Err(DataError::InvalidMonth(month).into())
    }
}

/// Single replicate; deterministic in `(config.base_seed, replicate_id)`.
pub fn simulate(
    model: &FittedModel,
    config: &SimulationConfig,
    replicate_id: u64,
) -> Result<OccurrenceRecord, SimulateError> {
    config.validate(model.max_lag)?;
    Simulator::new(model)?.replicate(config, replicate_id)
}

/// Like [`simulate`] but also returns the latent values behind every state.
pub fn simulate_with_latents(
    model: &FittedModel,
    config: &SimulationConfig,
    replicate_id: u64,
) -> Result<(OccurrenceRecord, Vec<f64>), SimulateError> {
    config.validate(model.max_lag)?;
    let mut rng = RngStream::new(config.base_seed, replicate_id);
    Simulator::new(model)?.run_with_latents(config.start, config.end, &mut rng)
}

/// Replicates `0..n_replicates`, in id order.
///
/// On failure the error carries the lowest failing replicate id.
pub fn simulate_ensemble(model: &FittedModel, config: &SimulationConfig) -> Result<Vec<OccurrenceRecord>, SimulateError> {
    config.validate(model.max_lag)?;
    let sim = Simulator::new(model)?;
    let ids: Vec<u64> = (0..config.n_replicates as u64).collect();
    let results = map_ids(&ids, |id| sim.replicate(config, id));
    results
        .into_iter()
        .zip(ids)
        .map(|(r, id)| {
            r.map_err(|e| SimulateError::Replicate {
                id,
                source: Box::new(e),
            })
        })
        .collect()
}

#[cfg(feature = "parallel")]
fn map_ids<T: Send>(ids: &[u64], f: impl Fn(u64) -> T + Sync) -> Vec<T> {
    use rayon::prelude::*;
    ids.par_iter().map(|&id| f(id)).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_ids<T>(ids: &[u64], f: impl Fn(u64) -> T) -> Vec<T> {
    ids.iter().map(|&id| f(id)).collect()
}

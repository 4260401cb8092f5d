//! Browser bindings for the demo page in `www/`.
//!
//! Three operations: the joint wet probability as a function of the latent
//! correlation (and its inverse), a short two-site simulation, and the
//! eigenvalue repair of a noisy correlation matrix.

use chrono::NaiveDate;
use latgen::data::Occurrence;
use latgen::model::{adjust_sigma_all, assemble_sigma_all, LagCorrBlocks, TruthSpec};
use latgen::numerics::{bivariate_normal_cdf, std_normal_quantile, sym_eigen, Matrix, RngStream};
use latgen::simulate::Simulator;
use wasm_bindgen::prelude::*;

type Res<T> = Result<T, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn to_js<T>(r: Res<T>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Joint wet probability `P(O_u = 1, O_v = 1)` at `n` evenly spaced latent
/// correlations in `[-1, 1]`, as interleaved `(rho, p)` pairs.
fn joint_prob_curve_impl(p_u: f64, p_v: f64, n: usize) -> Res<Vec<f64>> {
    let c_u = std_normal_quantile(1.0 - p_u).map_err(err)?;
    let c_v = std_normal_quantile(1.0 - p_v).map_err(err)?;
    let n = n.max(2);
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let rho = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
        let p = p_u + p_v - 1.0 + bivariate_normal_cdf(c_u, c_v, rho).map_err(err)?;
        out.push(rho);
        out.push(p.max(0.0));
    }
    Ok(out)
}

/// Latent correlation that reproduces `p_joint`; values outside the attainable
/// range are clamped to it.
fn solve_corr_impl(p_u: f64, p_v: f64, p_joint: f64) -> Res<f64> {
    let c_u = std_normal_quantile(1.0 - p_u).map_err(err)?;
    let c_v = std_normal_quantile(1.0 - p_v).map_err(err)?;
    latgen::model::solve_latent_corr(c_u, c_v, p_u, p_v, p_joint)
        .map(|s| s.rho)
        .map_err(err)
}

/// Two sites, lag 1: spatial correlation `spatial`, day-to-day persistence
/// `persistence`. Returns `2 * days` states (day-major, 1 = wet).
fn simulate_pair_impl(p_wet: f64, spatial: f64, persistence: f64, days: usize, seed: u64) -> Res<Vec<u8>> {
    let truth = TruthSpec {
        n_sites: 2,
        max_lag: 1,
        wet_prob_table: Some(vec![[p_wet; 12]; 2]),
        lag_blocks: Some(vec![
            vec![vec![1.0, spatial], vec![spatial, 1.0]],
            vec![
                vec![persistence, persistence * spatial],
                vec![persistence * spatial, persistence],
            ],
        ]),
        ..TruthSpec::default()
    };
    let model = truth.to_model().map_err(err)?;
    let sim = Simulator::new(&model).map_err(err)?;
    let start = NaiveDate::from_ymd_opt(2001, 1, 1).expect("valid date");
    let end = start + chrono::Duration::days(days.max(2) as i64 - 1);
    let occ = sim.run(start, end, &mut RngStream::new(seed, 0)).map_err(err)?;
    Ok(occ.states().iter().map(|&s| (s == Occurrence::Wet) as u8).collect())
}

/// Raw and repaired versions of a noisy correlation matrix.
#[wasm_bindgen]
pub struct RepairResult {
    raw: Vec<f64>,
    repaired: Vec<f64>,
    min_eigen_raw: f64,
    min_eigen_repaired: f64,
    eps1: f64,
}

#[wasm_bindgen]
impl RepairResult {
    /// Off-diagonal entries `i < j` before repair.
    #[wasm_bindgen(getter)]
    pub fn raw(&self) -> Vec<f64> {
        self.raw.clone()
    }

    /// The same entries after repair.
    #[wasm_bindgen(getter)]
    pub fn repaired(&self) -> Vec<f64> {
        self.repaired.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn min_eigen_raw(&self) -> f64 {
        self.min_eigen_raw
    }

    #[wasm_bindgen(getter)]
    pub fn min_eigen_repaired(&self) -> f64 {
        self.min_eigen_repaired
    }

    #[wasm_bindgen(getter)]
    pub fn eps1(&self) -> f64 {
        self.eps1
    }
}

/// An exponential correlation matrix over `n` sites plus uniform noise of
/// half-width `noise` on each off-diagonal pair, repaired with floor `eps2`.
fn repair_demo_impl(n: usize, noise: f64, eps2: f64, seed: u64) -> Res<RepairResult> {
    let n = n.clamp(2, 40);
    let mut rng = RngStream::new(seed, 1);
    let mut m = Matrix::identity(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (0.8f64.powi((j - i) as i32) + noise * (2.0 * rng.uniform() - 1.0)).clamp(-1.0, 1.0);
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    let raw = assemble_sigma_all(&LagCorrBlocks { month: 1, blocks: vec![m] });
    let adj = adjust_sigma_all(&raw, eps2).map_err(err)?;
    let a = adj.adjustment.as_ref().expect("adjusted");
    let upper = |get: &dyn Fn(usize, usize) -> f64| {
        let mut v = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                v.push(get(i, j));
            }
        }
        v
    };
    let min_eigen = |m: &latgen::numerics::SymMatrix| -> Res<f64> {
        Ok(*sym_eigen(m).map_err(err)?.values.last().expect("non-empty"))
    };
    Ok(RepairResult {
        raw: upper(&|i, j| raw.matrix.get(i, j)),
        repaired: upper(&|i, j| adj.matrix.get(i, j)),
        min_eigen_raw: min_eigen(&raw.matrix)?,
        min_eigen_repaired: min_eigen(&adj.matrix)?,
        eps1: a.eps1,
    })
}

#[wasm_bindgen]
pub fn joint_prob_curve(p_u: f64, p_v: f64, n: usize) -> Result<Vec<f64>, JsError> {
    to_js(joint_prob_curve_impl(p_u, p_v, n))
}

#[wasm_bindgen]
pub fn solve_corr(p_u: f64, p_v: f64, p_joint: f64) -> Result<f64, JsError> {
    to_js(solve_corr_impl(p_u, p_v, p_joint))
}

#[wasm_bindgen]
pub fn simulate_pair(p_wet: f64, spatial: f64, persistence: f64, days: usize, seed: u64) -> Result<Vec<u8>, JsError> {
    to_js(simulate_pair_impl(p_wet, spatial, persistence, days, seed))
}

#[wasm_bindgen]
pub fn repair_demo(n: usize, noise: f64, eps2: f64, seed: u64) -> Result<RepairResult, JsError> {
    to_js(repair_demo_impl(n, noise, eps2, seed))
}

use chrono::NaiveDate;
use latgen::data::{binarize, synth_record, Calendar, Occurrence, OccurrenceRecord};
use latgen::model::{
    adjust_sigma_all, assemble_sigma_all, eig_repair, estimate_joint_prob, estimate_marginals, fit,
    fit_with_diagnostics, solve_latent_corr, EstimationFailure, FitOptions, FittedModel, LagCorrBlocks, ModelError,
    TruthSpec,
};
use latgen::numerics::{bivariate_normal_cdf, cholesky, std_normal_quantile, sym_eigen, Matrix, RngStream, SymMatrix};
use proptest::prelude::*;

fn synthetic(truth: &TruthSpec, years: u32, seed: u64, missing: f64) -> (FittedModel, OccurrenceRecord) {
    let model = truth.to_model().unwrap();
    let rec = synth_record(&model, 1901, years, &mut RngStream::new(seed, 0), missing).unwrap();
    (model, binarize(&rec, 1.0).unwrap())
}

fn bvn_density(a: f64, b: f64, rho: f64) -> f64 {
    let q = 1.0 - rho * rho;
    (-(a * a - 2.0 * rho * a * b + b * b) / (2.0 * q)).exp() / (2.0 * std::f64::consts::PI * q.sqrt())
}

#[test]
fn inversion_recovers_rho_on_grid() {
    let ps = [0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95];
    let mut checked = 0;
    for &pu in &ps {
        for &pv in &ps {
            let cu = std_normal_quantile(1.0 - pu).unwrap();
            let cv = std_normal_quantile(1.0 - pv).unwrap();
            for i in 0..=18 {
                let rho0 = -0.98 + i as f64 * (1.96 / 18.0);
                let pj = pu + pv - 1.0 + bivariate_normal_cdf(cu, cv, rho0).unwrap();
                let got = solve_latent_corr(cu, cv, pu, pv, pj).unwrap();
                // The slope of the forward map is the bivariate density; where it
                // vanishes below f64 resolution rho is not identifiable from pj.
                let slope = bvn_density(cu, cv, rho0);
                if slope > 1e-6 {
                    checked += 1;
                    assert!((got.rho - rho0).abs() <= 1e-8, "pu={pu} pv={pv} rho0={rho0} got {}", got.rho);
                } else {
                    let back = pu + pv - 1.0 + bivariate_normal_cdf(cu, cv, got.rho).unwrap();
                    assert!((back - pj).abs() <= 1e-12, "pu={pu} pv={pv} rho0={rho0}");
                }
            }
        }
    }
    assert!(checked > 800, "{checked}");
}

#[test]
fn inversion_monotone_in_joint() {
    for &(pu, pv) in &[(0.3, 0.6), (0.5, 0.5), (0.1, 0.15)] {
        let cu = std_normal_quantile(1.0 - pu).unwrap();
        let cv = std_normal_quantile(1.0 - pv).unwrap();
        let lo = (pu + pv - 1.0f64).max(0.0);
        let hi = pu.min(pv);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=200 {
            let pj = lo + (hi - lo) * i as f64 / 200.0;
            let rho = solve_latent_corr(cu, cv, pu, pv, pj).unwrap().rho;
            assert!(rho >= prev);
            prev = rho;
        }
    }
}

proptest! {
    #[test]
    fn repair_keeps_unit_diagonal_and_pd(
        raw in prop::collection::vec(-1.0f64..1.0, 15),
        eps1 in -0.2f64..0.2,
        eps2 in 0.01f64..0.3,
    ) {
        let mut k = 0;
        let mut m = SymMatrix::identity(6);
        for i in 0..6 {
            for j in (i + 1)..6 {
                m.set(i, j, raw[k]);
                k += 1;
            }
        }
        let out = eig_repair(&m, eps1, eps2).unwrap();
        for i in 0..6 {
            prop_assert!((out.get(i, i) - 1.0).abs() <= 1e-12);
        }
        prop_assert!(*sym_eigen(&out).unwrap().values.last().unwrap() > 0.0);
    }

    #[test]
    fn assemble_block_round_trip(entries in prop::collection::vec(-0.9f64..0.9, 3 * 9)) {
        let s = 3;
        let blocks: Vec<Matrix> = (0..3)
            .map(|k| {
                let mut b = Matrix::from_vec(s, s, entries[k * 9..(k + 1) * 9].to_vec()).unwrap();
                if k == 0 {
                    for u in 0..s {
                        b.set(u, u, 1.0);
                        for v in 0..u {
                            let x = b.get(v, u);
                            b.set(u, v, x);
                        }
                    }
                }
                b
            })
            .collect();
        let lb = LagCorrBlocks { month: 4, blocks };
        let full = assemble_sigma_all(&lb);
        prop_assert_eq!(full.lag_blocks(), lb.clone());
        for i in 0..3 {
            for j in i..3 {
                prop_assert_eq!(full.block(j, i), lb.blocks[j - i].transpose());
            }
        }
    }
}

#[test]
fn joint_probability_matches_latent_truth() {
    // Two sites, rho = 0.6, p = 0.4 everywhere, no temporal dependence.
    let truth = TruthSpec {
        n_sites: 2,
        wet_prob_table: Some(vec![[0.4; 12]; 2]),
        lag_blocks: Some(vec![vec![vec![1.0, 0.6], vec![0.6, 1.0]]]),
        ..TruthSpec::default()
    };
    let (_, occ) = synthetic(&truth, 300, 21, 0.0);
    let c = std_normal_quantile(0.6).unwrap();
    let implied = 0.4 + 0.4 - 1.0 + bivariate_normal_cdf(c, c, 0.6).unwrap();
    // Pool all months: about 1.1e5 days.
    let (mut hits, mut n) = (0usize, 0usize);
    for t in 0..occ.n_days() {
        n += 1;
        hits += (occ.state(t, 0) == Occurrence::Wet && occ.state(t, 1) == Occurrence::Wet) as usize;
    }
    let p = hits as f64 / n as f64;
    let se = (implied * (1.0 - implied) / n as f64).sqrt();
    assert!((p - implied).abs() <= 3.0 * se, "p = {p}, implied = {implied}, se = {se}");
    let jan = estimate_joint_prob(&occ, 0, 1, 0, 1).unwrap();
    assert!((jan - implied).abs() < 0.03);
}

#[test]
fn refit_marginals_within_binomial_bound() {
    let (truth, occ) = synthetic(&TruthSpec::default(), 100, 5, 0.05);
    let m = estimate_marginals(&occ).unwrap();
    for site in 0..4 {
        for month in 1..=12 {
            let p = truth.marginals.p(site, month);
            let n = m.n(site, month) as f64;
            let bound = 3.0 * (p * (1.0 - p) / n).sqrt();
            // Day-to-day persistence inflates the variance; allow the AR(1)
            // variance factor (1 + phi) / (1 - phi) for the latent lag-1 corr.
            let inflation = ((1.0 + 0.4) / (1.0 - 0.4f64)).sqrt();
            assert!(
                (m.p(site, month) - p).abs() <= bound * inflation,
                "site {site} month {month}: {} vs {p}",
                m.p(site, month)
            );
        }
    }
}

#[test]
fn fit_recovers_latent_correlations() {
    let truth = TruthSpec {
        n_sites: 2,
        max_lag: 1,
        ..TruthSpec::default()
    };
    let model = truth.to_model().unwrap();
    // Spread of the estimator across independent records serves as the standard error.
    let opts = FitOptions {
        max_lag: 1,
        ..FitOptions::default()
    };
    let fits: Vec<FittedModel> = (0..12)
        .map(|seed| fit(&synthetic(&truth, 100, 100 + seed, 0.0).1, &opts).unwrap())
        .collect();
    let target = fit(&synthetic(&truth, 100, 999, 0.0).1, &opts).unwrap();
    for month in [1, 4, 7, 10] {
        let order = model.covariance(month).matrix.order();
        for i in 0..order {
            for j in (i + 1)..order {
                let vals: Vec<f64> = fits.iter().map(|f| f.covariance(month).matrix.get(i, j)).collect();
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64).sqrt();
                let want = model.covariance(month).matrix.get(i, j);
                let got = target.covariance(month).matrix.get(i, j);
                assert!((got - want).abs() <= 3.0 * sd, "month {month} ({i},{j}): {got} vs {want}, sd {sd}");
            }
        }
    }
}

#[test]
fn marginals_do_not_depend_on_lag() {
    let (_, occ) = synthetic(&TruthSpec::default(), 30, 8, 0.02);
    let r0 = fit(&occ, &FitOptions { max_lag: 0, ..FitOptions::default() }).unwrap();
    let r2 = fit(&occ, &FitOptions::default()).unwrap();
    assert_eq!(r0.marginals, r2.marginals);
    assert_eq!(r0.covariance(3).matrix.order(), 4);
    assert_eq!(r2.covariance(3).matrix.order(), 12);
}

#[test]
fn all_dry_july_is_reported_with_every_failure() {
    let (_, occ) = synthetic(&TruthSpec::default(), 10, 3, 0.0);
    let cal = occ.calendar().clone();
    let s = occ.n_sites();
    let mut states = occ.states().to_vec();
    for t in 0..cal.len() {
        if cal.month(t) == 7 {
            states[t * s + 2] = Occurrence::Dry;
        }
        if cal.month(t) == 2 {
            states[t * s] = Occurrence::Wet;
        }
    }
    let bad = OccurrenceRecord::new(cal, occ.sites().to_vec(), states).unwrap();
    match fit(&bad, &FitOptions::default()) {
        Err(ModelError::Estimation(f)) => {
            assert_eq!(f.len(), 2);
            assert!(f.contains(&EstimationFailure::DegenerateMarginal {
                site: "S03".into(),
                month: 7,
                wet: 0,
                dry: 310
            }));
            let msg = ModelError::Estimation(f).to_string();
            assert!(msg.contains("S03") && msg.contains("month 7") && msg.contains("S01") && msg.contains("month 2"));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn model_json_round_trip_is_bit_exact() {
    let (_, occ) = synthetic(&TruthSpec::default(), 20, 4, 0.01);
    let model = fit(&occ, &FitOptions::default()).unwrap();
    let text = model.to_json().unwrap();
    let back = FittedModel::from_json(&text).unwrap();
    assert_eq!(back, model);
    for (a, b) in back.covariances.iter().zip(&model.covariances) {
        for (x, y) in a.matrix.as_slice().iter().zip(b.matrix.as_slice()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
    assert_eq!(back.to_json().unwrap(), text);
    assert!(FittedModel::from_json(&text.replace("\"format_version\": 1", "\"format_version\": 9")).is_err());
}

#[test]
fn repair_of_ten_site_fit_stays_small() {
    let truth = TruthSpec {
        n_sites: 10,
        spatial_corr: 0.8,
        persistence: 0.35,
        ..TruthSpec::default()
    };
    let (_, occ) = synthetic(&truth, 40, 77, 0.0);
    let (model, diag) = fit_with_diagnostics(&occ, &FitOptions::default()).unwrap();
    let mut deltas = Vec::new();
    for (raw, adj) in diag.raw.iter().zip(&model.covariances) {
        assert_eq!(raw.order(), 30);
        assert!(cholesky(&adj.matrix).is_ok());
        for (a, b) in raw.as_slice().iter().zip(adj.matrix.as_slice()) {
            deltas.push((a - b).abs());
        }
    }
    for m in &diag.months {
        assert!(m.sum_delta.abs() <= 1e-8);
        assert!(m.min_eigen_adjusted > 0.0);
    }
    deltas.sort_by(f64::total_cmp);
    let p95 = deltas[(deltas.len() as f64 * 0.95) as usize];
    assert!(p95 <= 0.05, "95th percentile |delta| = {p95}");
}

#[test]
fn adjustment_zero_mean_on_degenerate_input() {
    // Two copies of the same site: the raw matrix is singular.
    let s0 = vec![vec![1.0, 1.0, 0.5], vec![1.0, 1.0, 0.5], vec![0.5, 0.5, 1.0]];
    let s1 = vec![vec![0.6, 0.6, 0.3], vec![0.6, 0.6, 0.3], vec![0.3, 0.3, 0.6]];
    let blocks = LagCorrBlocks {
        month: 1,
        blocks: vec![Matrix::from_rows(&s0).unwrap(), Matrix::from_rows(&s1).unwrap()],
    };
    let raw = assemble_sigma_all(&blocks);
    let adj = adjust_sigma_all(&raw, 0.05).unwrap();
    let sum: f64 = adj.matrix.as_slice().iter().zip(raw.matrix.as_slice()).map(|(a, b)| a - b).sum();
    assert!(sum.abs() <= 1e-8);
    assert!(cholesky(&adj.matrix).is_ok());
    assert!(adj.matrix.get(0, 1) < 1.0);
}

#[test]
fn fit_is_deterministic() {
    let (_, occ) = synthetic(&TruthSpec::default(), 15, 10, 0.03);
    let a = fit(&occ, &FitOptions::default()).unwrap();
    let b = fit(&occ, &FitOptions::default()).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    let cal = Calendar::new(NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(), 0);
    let empty = OccurrenceRecord::new(cal, vec!["x".into()], vec![]).unwrap();
    assert!(fit(&empty, &FitOptions::default()).is_err());
}

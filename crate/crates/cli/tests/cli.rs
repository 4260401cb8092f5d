use std::path::Path;
use std::process::{Command, Output};

use latgen::data::{binarize, load_record, Schema};
use latgen::model::{estimate_marginals, FittedModel};

fn latgen(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latgen")).current_dir(cwd).args(args).output().unwrap()
}

fn ok(cwd: &Path, args: &[&str]) {
    let out = latgen(cwd, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Small synthetic setup: 2 sites, r = 1, 1961-1990, calibration 1961-1975.
fn small(dir: &Path) {
    std::fs::write(
        dir.join("run.toml"),
        r#"
out = "out"
input = "out/record.csv"
seed = 11

[calibration]
start = 1961
end = 1975

[validation]
start = 1976
end = 1990

[fit]
max_lag = 1

[simulate]
n_replicates = 3

[synth]
missing_rate = 0.02

[synth.truth]
n_sites = 2
max_lag = 1
"#,
    )
    .unwrap();
    ok(dir, &["synth", "--config", "run.toml"]);
}

#[test]
fn fit_echoes_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--out", "out", "--n-sites", "2", "--years", "1961-1985"]);
    ok(d, &["fit", "--out", "out", "--input", "out/record.csv"]);
    let echo: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("out/config-fit.json")).unwrap()).unwrap();
    assert_eq!(echo["wet_threshold_mm"], 1.0);
    assert_eq!(echo["fit"]["max_lag"], 2);
    assert_eq!(echo["fit"]["eps2"], 0.05);
    assert_eq!(echo["simulate"]["n_replicates"], 1000);
    assert_eq!(echo["calibration"]["start"], 1961);
    assert_eq!(echo["validation"]["end"], 2001);
    assert!(echo.get("threads").is_none());

    let text = std::fs::read_to_string(d.join("out/model.json")).unwrap();
    let model = FittedModel::from_json(&text).unwrap();
    assert_eq!(model.to_json().unwrap(), text);
    let diag = std::fs::read_to_string(d.join("out/diagnostics.csv")).unwrap();
    assert!(diag.starts_with("month,min_eigen_raw,min_eigen_adjusted,eps1,max_abs_delta,sum_delta\n"));
}

#[test]
fn full_pipeline_with_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small(d);
    ok(d, &["fit", "--config", "run.toml"]);
    ok(d, &["simulate", "--config", "run.toml", "--as-depth", "--keep-latents"]);
    ok(d, &["evaluate", "--config", "run.toml", "--emit-svg"]);
    for f in ["sim/rep-0.csv", "sim/latent-2.csv", "reports/lag_corr_k0-calibration.csv", "reports/agg_total_corr_year-validation.svg"] {
        assert!(d.join("out").join(f).is_file(), "{f}");
    }
    let rep = std::fs::read_to_string(d.join("out/sim/rep-0.csv")).unwrap();
    assert!(rep.lines().nth(1).unwrap().ends_with(".0"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("out/reports/pct_wet-validation.json")).unwrap()).unwrap();
    assert_eq!(json["format"], "latgen-report");
    assert_eq!(json["n_replicates"], 3);
}

#[test]
fn json_config_matches_toml() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("a.toml"), "out = \"a\"\nseed = 3\n[synth]\nyears = { start = 1990, end = 1992 }\n[synth.truth]\nn_sites = 2\n").unwrap();
    std::fs::write(
        d.join("b.json"),
        r#"{"out": "b", "seed": 3, "synth": {"years": {"start": 1990, "end": 1992}, "truth": {"n_sites": 2}}}"#,
    )
    .unwrap();
    ok(d, &["synth", "--config", "a.toml"]);
    ok(d, &["synth", "--config", "b.json"]);
    assert_eq!(std::fs::read(d.join("a/record.csv")).unwrap(), std::fs::read(d.join("b/record.csv")).unwrap());
    let out = latgen(d, &["synth", "--config", "a.toml", "--seed", "4", "--out", "c"]);
    assert!(out.status.success());
    assert_ne!(std::fs::read(d.join("a/record.csv")).unwrap(), std::fs::read(d.join("c/record.csv")).unwrap());
}

#[test]
fn simulate_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small(d);
    ok(d, &["fit", "--config", "run.toml"]);
    ok(d, &["simulate", "--config", "run.toml", "-n", "2"]);
    let first = std::fs::read(d.join("out/sim/rep-1.csv")).unwrap();
    let manifest = std::fs::read(d.join("out/manifest.json")).unwrap();
    ok(d, &["simulate", "--config", "run.toml", "-n", "2", "--threads", "2"]);
    assert_eq!(std::fs::read(d.join("out/sim/rep-1.csv")).unwrap(), first);
    assert_eq!(std::fs::read(d.join("out/manifest.json")).unwrap(), manifest);
    assert!(!d.join("out/sim/rep-2.csv").exists());
}

#[test]
fn synth_is_reproducible_and_recoverable() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for out in ["x", "y"] {
        ok(d, &["synth", "--out", out, "--seed", "5", "--n-sites", "2", "--max-lag", "1", "--years", "1901-1950"]);
    }
    for f in ["record.csv", "truth-model.json"] {
        assert_eq!(std::fs::read(d.join("x").join(f)).unwrap(), std::fs::read(d.join("y").join(f)).unwrap());
    }
    let truth = FittedModel::from_json(&std::fs::read_to_string(d.join("x/truth-model.json")).unwrap()).unwrap();
    let rec = load_record(std::fs::File::open(d.join("x/record.csv")).unwrap(), &Schema::default()).unwrap();
    let m = estimate_marginals(&binarize(&rec, 1.0).unwrap()).unwrap();
    for site in 0..2 {
        for month in 1..=12 {
            let p = truth.marginals.p(site, month);
            let n = m.n(site, month) as f64;
            // Binomial bound widened by the variance factor of day-to-day persistence 0.4.
            let bound = 3.0 * (p * (1.0 - p) / n).sqrt() * (1.4f64 / 0.6).sqrt();
            assert!((m.p(site, month) - p).abs() <= bound, "site {site} month {month}");
        }
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    // Invalid truth: correlation outside [-1, 1].
    std::fs::write(d.join("bad.toml"), "[synth.truth]\nspatial_corr = 1.5\n").unwrap();
    assert_eq!(code(&latgen(d, &["synth", "--config", "bad.toml"])), 2);
    // Unknown config key and missing input.
    std::fs::write(d.join("typo.toml"), "wet_treshold_mm = 2.0\n").unwrap();
    assert_eq!(code(&latgen(d, &["fit", "--config", "typo.toml"])), 2);
    assert_eq!(code(&latgen(d, &["fit", "--input", "nope.csv"])), 2);

    small(d);
    // Degenerate site-month: make every July day dry at site S02.
    let p = d.join("out/record.csv");
    let text = std::fs::read_to_string(&p).unwrap();
    let edited: String = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            let c: Vec<&str> = l.split(',').collect();
            if i > 0 && c[1] == "7" {
                format!("{},{},{},{},0.0\n", c[0], c[1], c[2], c[3])
            } else {
                format!("{l}\n")
            }
        })
        .collect();
    std::fs::write(d.join("dry.csv"), edited).unwrap();
    let out = latgen(d, &["fit", "--config", "run.toml", "--input", "dry.csv", "--out", "dry"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("S02") && stderr(&out).contains("month 7"), "{}", stderr(&out));

    // Tampered model.
    ok(d, &["fit", "--config", "run.toml"]);
    let model = d.join("out/model.json");
    let original = std::fs::read_to_string(&model).unwrap();
    std::fs::write(&model, original.replacen("\"max_lag\": 1", "\"max_lag\": 1 ", 1)).unwrap();
    let out = latgen(d, &["simulate", "--config", "run.toml"]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    std::fs::write(&model, &original).unwrap();

    // Missing replicate file.
    ok(d, &["simulate", "--config", "run.toml"]);
    std::fs::remove_file(d.join("out/sim/rep-2.csv")).unwrap();
    let out = latgen(d, &["evaluate", "--config", "run.toml"]);
    assert_eq!(code(&out), 5);
    assert!(stderr(&out).contains("replicate 2"), "{}", stderr(&out));
}

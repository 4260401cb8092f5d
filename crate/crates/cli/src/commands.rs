//! The four subcommands. Each takes a fully resolved [`RunConfig`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use latgen::data::{
    binarize, load_record, read_occurrence, synth_record, write_occurrence, write_record, DataError, OccurrenceRecord,
    Schema, SeasonMap,
};
use latgen::evaluate::{compare, to_json, to_svg, write_csv, EvaluateError};
use latgen::model::{content_digest, fit_with_diagnostics, FitDiagnostics, FittedModel, ModelError};
use latgen::numerics::RngStream;
use latgen::simulate::{SimulateError, SimulationConfig, Simulator};
use rayon::prelude::*;

use crate::config::{RunConfig, YearRange};
use crate::error::CliError;
use crate::output::{
    read_text, relative_to, resolve, write_atomic, FileRef, FitEntry, Manifest, ReplicateEntry, SimulationEntry,
};

/// Stream id of the synthetic "observed" record, kept apart from replicate ids.
const SYNTH_STREAM: u64 = u64::MAX;

/// Replicates simulated and serialized per batch before writing.
const BATCH: usize = 64;

fn data_err(e: DataError) -> CliError {
    CliError::Data(e.to_string())
}

fn model_err(e: ModelError) -> CliError {
    match e {
        ModelError::Data(d) => CliError::Data(d.to_string()),
        other => CliError::Estimation(other.to_string()),
    }
}

fn sim_err(e: SimulateError) -> CliError {
    match e {
        SimulateError::InvalidConfig(m) => CliError::Config(m),
        other => CliError::Simulation(other.to_string()),
    }
}

fn write_echo(cfg: &RunConfig, cmd: &str) -> Result<(), CliError> {
    write_atomic(&cfg.out.join(format!("config-{cmd}.json")), cfg.echo().as_bytes())
}

fn load_input(path: &Path, sites: Option<Vec<String>>, threshold: f64) -> Result<(OccurrenceRecord, String), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let schema = Schema {
        sites,
        ..Schema::default()
    };
    let record = load_record(bytes.as_slice(), &schema).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok((binarize(&record, threshold).map_err(data_err)?, content_digest(&bytes)))
}

fn period_slice(occ: &OccurrenceRecord, years: YearRange) -> OccurrenceRecord {
    occ.between(years.first_day(), years.last_day())
}

fn diagnostics_csv(diag: &FitDiagnostics) -> String {
    let mut s = String::from("month,min_eigen_raw,min_eigen_adjusted,eps1,max_abs_delta,sum_delta\n");
    for m in &diag.months {
        writeln!(
            s,
            "{},{:?},{:?},{:?},{:?},{:?}",
            m.month, m.min_eigen_raw, m.min_eigen_adjusted, m.eps1, m.max_abs_delta, m.sum_delta
        )
        .unwrap();
    }
    s
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<(), CliError> {
    let input = cfg.input_path()?;
    let (occ, input_digest) = load_input(input, cfg.sites.clone(), cfg.wet_threshold_mm)?;
    let occ = period_slice(&occ, cfg.calibration);
    if occ.n_days() == 0 {
        return Err(CliError::Data(format!(
            "{} has no days in the calibration period {}-{}",
            input.display(),
            cfg.calibration.start,
            cfg.calibration.end
        )));
    }
    let (model, diag) = fit_with_diagnostics(&occ, &cfg.fit_options()).map_err(model_err)?;
    for w in &diag.frechet_warnings {
        eprintln!(
            "warning: month {} lag {} sites ({}, {}): joint probability {} outside the attainable range, clamped to {}",
            w.month, w.lag, model.sites[w.site_u], model.sites[w.site_v], w.p_joint, w.clamped_to
        );
    }
    let json = model.to_json().map_err(model_err)?;
    let model_path = cfg.out.join("model.json");
    write_atomic(&model_path, json.as_bytes())?;
    write_atomic(&cfg.out.join("diagnostics.csv"), diagnostics_csv(&diag).as_bytes())?;

    let manifest_path = cfg.out.join("manifest.json");
    let mut manifest = Manifest::load_or_default(&manifest_path).map_err(CliError::Data)?;
    manifest.fit = Some(FitEntry {
        input_digest,
        model: FileRef {
            path: relative_to(&model_path, &cfg.out),
            digest: content_digest(json.as_bytes()),
        },
    });
    manifest.save(&manifest_path)?;
    write_echo(cfg, "fit")?;
    eprintln!(
        "fitted {} sites, {} days, r = {}; wrote {}",
        model.n_sites(),
        occ.n_days(),
        model.max_lag,
        model_path.display()
    );
    Ok(())
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

fn remove_stale(dir: &Path, keep: usize) -> Result<(), CliError> {
    let Ok(entries) = std::fs::read_dir(dir) else { return Ok(()) };
    for entry in entries.flatten() {
        let name = entry.file_name();
        let name = name.to_string_lossy();
        let id = ["rep-", "latent-"]
            .iter()
            .find_map(|p| name.strip_prefix(p))
            .and_then(|rest| rest.strip_suffix(".csv"))
            .and_then(|n| n.parse::<usize>().ok());
        if matches!(id, Some(k) if k >= keep) {
            std::fs::remove_file(entry.path()).map_err(|e| CliError::io(&entry.path(), e))?;
        }
    }
    Ok(())
}

fn latents_csv(occ: &OccurrenceRecord, z: &[f64]) -> String {
    let s = occ.n_sites();
    let cal = occ.calendar();
    let mut out = format!("year,month,day,{}\n", occ.sites().join(","));
    for t in 0..occ.n_days() {
        write!(out, "{},{},{}", cal.year(t), cal.month(t), cal.day(t)).unwrap();
        for v in &z[t * s..(t + 1) * s] {
            write!(out, ",{v:?}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let model_path = cfg.model_path();
    let bytes = std::fs::read(&model_path).map_err(|e| CliError::Simulation(format!("{}: {e}", model_path.display())))?;
    let model_digest = content_digest(&bytes);
    let manifest_path = cfg.out.join("manifest.json");
    let mut manifest = Manifest::load_or_default(&manifest_path).map_err(CliError::Simulation)?;
    if let Some(fit) = &manifest.fit {
        let recorded = resolve(&cfg.out, &fit.model.path);
        if same_file(&recorded, &model_path) && fit.model.digest != model_digest {
            return Err(CliError::Simulation(format!(
                "{} does not match the manifest: recorded {}, found {}",
                model_path.display(),
                fit.model.digest,
                model_digest
            )));
        }
    }
    let text = String::from_utf8(bytes).map_err(|e| CliError::Simulation(format!("{}: {e}", model_path.display())))?;
    let model = FittedModel::from_json(&text).map_err(|e| CliError::Simulation(format!("{}: {e}", model_path.display())))?;

    let years = cfg.simulation_years();
    let config = SimulationConfig {
        start: years.first_day(),
        end: years.last_day(),
        n_replicates: cfg.simulate.n_replicates,
        base_seed: cfg.seed,
    };
    config.validate(model.max_lag).map_err(sim_err)?;
    let sim = Simulator::new(&model).map_err(sim_err)?;

    let sim_dir = cfg.out.join("sim");
    let keep_latents = cfg.simulate.keep_latents;
    let as_depth = cfg.simulate.as_depth;
    let mut replicates = Vec::with_capacity(config.n_replicates);
    let ids: Vec<u64> = (0..config.n_replicates as u64).collect();
    for chunk in ids.chunks(BATCH) {
        let rendered: Vec<Result<(Vec<u8>, Option<String>), CliError>> = chunk
            .par_iter()
            .map(|&id| {
                let wrap = |e: SimulateError| CliError::Simulation(format!("replicate {id}: {e}"));
                let mut rng = RngStream::new(config.base_seed, id);
                let (occ, z) = sim.run_with_latents(config.start, config.end, &mut rng).map_err(wrap)?;
                let mut buf = Vec::new();
                write_occurrence(&occ, &mut buf, as_depth).map_err(|e| wrap(e.into()))?;
                Ok((buf, keep_latents.then(|| latents_csv(&occ, &z))))
            })
            .collect();
        for (&id, r) in chunk.iter().zip(rendered) {
            let (csv, latents) = r?;
            let path = sim_dir.join(format!("rep-{id}.csv"));
            write_atomic(&path, &csv)?;
            if let Some(l) = latents {
                write_atomic(&sim_dir.join(format!("latent-{id}.csv")), l.as_bytes())?;
            }
            replicates.push(ReplicateEntry {
                id,
                file: FileRef {
                    path: relative_to(&path, &cfg.out),
                    digest: content_digest(&csv),
                },
            });
        }
    }
    remove_stale(&sim_dir, config.n_replicates)?;

    manifest.simulation = Some(SimulationEntry {
        model: FileRef {
            path: if model_path.starts_with(&cfg.out) {
                relative_to(&model_path, &cfg.out)
            } else {
                model_path.canonicalize().unwrap_or(model_path.clone())
            },
            digest: model_digest,
        },
        seed: config.base_seed,
        start: config.start.to_string(),
        end: config.end.to_string(),
        as_depth,
        replicates,
    });
    manifest.save(&manifest_path)?;
    write_echo(cfg, "simulate")?;
    eprintln!(
        "simulated {} replicates of {}..{} into {}",
        config.n_replicates,
        config.start,
        config.end,
        sim_dir.display()
    );
    Ok(())
}

fn eval_err(e: EvaluateError) -> CliError {
    CliError::Evaluation(e.to_string())
}

fn load_replicate(base: &Path, entry: &ReplicateEntry) -> Result<OccurrenceRecord, CliError> {
    let path = resolve(base, &entry.file.path);
    let bytes = std::fs::read(&path)
        .map_err(|e| CliError::Evaluation(format!("replicate {}: cannot read {}: {e}", entry.id, path.display())))?;
    let digest = content_digest(&bytes);
    if digest != entry.file.digest {
        return Err(CliError::Evaluation(format!(
            "replicate {}: {} does not match the manifest digest",
            entry.id,
            path.display()
        )));
    }
    read_occurrence(bytes.as_slice())
        .map_err(|e| CliError::Evaluation(format!("replicate {}: {}: {e}", entry.id, path.display())))
}

pub fn cmd_evaluate(cfg: &RunConfig) -> Result<(), CliError> {
    let manifest_path = cfg.manifest_path();
    let text = read_text(&manifest_path)
        .map_err(|e| CliError::Evaluation(format!("manifest {}: {e}", manifest_path.display())))?;
    let manifest = Manifest::parse(&text).map_err(|e| CliError::Evaluation(format!("{}: {e}", manifest_path.display())))?;
    let base: PathBuf = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let sim = manifest
        .simulation
        .ok_or_else(|| CliError::Evaluation(format!("{} lists no simulation; run `simulate` first", manifest_path.display())))?;

    let model_path = resolve(&base, &sim.model.path);
    let model_bytes = std::fs::read(&model_path)
        .map_err(|e| CliError::Evaluation(format!("model {}: {e}", model_path.display())))?;
    if content_digest(&model_bytes) != sim.model.digest {
        return Err(CliError::Evaluation(format!(
            "{} changed since the ensemble was simulated",
            model_path.display()
        )));
    }
    let model = std::str::from_utf8(&model_bytes)
        .map_err(|e| e.to_string())
        .and_then(|t| FittedModel::from_json(t).map_err(|e| e.to_string()))
        .map_err(|e| CliError::Evaluation(format!("{}: {e}", model_path.display())))?;

    let (observed, _) = load_input(cfg.input_path()?, Some(model.sites.clone()), model.wet_threshold_mm)?;
    let ensemble: Vec<OccurrenceRecord> = sim
        .replicates
        .par_iter()
        .map(|entry| load_replicate(&base, entry))
        .collect::<Result<_, _>>()?;
    if ensemble.is_empty() {
        return Err(eval_err(EvaluateError::EmptyEnsemble));
    }

    let map = SeasonMap::new(cfg.evaluate.winter_start)
        .ok_or_else(|| CliError::Config(format!("invalid winter_start {}", cfg.evaluate.winter_start)))?;
    let levels = &cfg.evaluate.indices.quantile_levels;
    let reports = cfg.out.join("reports");
    for (name, years) in [("calibration", cfg.calibration), ("validation", cfg.validation)] {
        let obs = period_slice(&observed, years);
        let Some(last) = obs.calendar().end() else {
            return Err(CliError::Evaluation(format!(
                "observed record has no days in the {name} period {}-{}",
                years.start, years.end
            )));
        };
        let first = obs.calendar().start();
        let reps: Vec<OccurrenceRecord> = ensemble.iter().map(|r| r.between(first, last)).collect();
        let cmp = compare(&obs, &reps, &cfg.evaluate.indices, &map).map_err(eval_err)?;
        for idx in &cmp.indices {
            let stem = format!("{}-{name}", idx.stem());
            let mut csv = Vec::new();
            write_csv(idx, levels, &mut csv).map_err(|e| CliError::io(&reports, e))?;
            write_atomic(&reports.join(format!("{stem}.csv")), &csv)?;
            let json = to_json(idx, name, levels).map_err(|e| CliError::Evaluation(e.to_string()))?;
            write_atomic(&reports.join(format!("{stem}.json")), json.as_bytes())?;
            if cfg.evaluate.emit_svg {
                let title = format!("{} ({name})", idx.stem());
                write_atomic(&reports.join(format!("{stem}.svg")), to_svg(idx, &title).as_bytes())?;
            }
            for label in &idx.skipped {
                eprintln!("note: {stem}: {label} skipped (undefined observed value)");
            }
        }
    }
    write_echo(cfg, "evaluate")?;
    eprintln!("evaluated {} replicates; reports in {}", ensemble.len(), reports.display());
    Ok(())
}

pub fn cmd_synth(cfg: &RunConfig) -> Result<(), CliError> {
    let truth = cfg.synth.truth.to_model().map_err(|e| CliError::Data(format!("invalid truth parameters: {e}")))?;
    let years = cfg.synth_years();
    let n_years = (years.end - years.start + 1) as u32;
    let mut rng = RngStream::new(cfg.seed, SYNTH_STREAM);
    let record = synth_record(&truth, years.start, n_years, &mut rng, cfg.synth.missing_rate).map_err(|e| match e {
        SimulateError::Data(d) => data_err(d),
        other => sim_err(other),
    })?;
    let mut csv = Vec::new();
    write_record(&record, &mut csv).map_err(data_err)?;
    write_atomic(&cfg.out.join("record.csv"), &csv)?;
    let json = truth.to_json().map_err(model_err)?;
    write_atomic(&cfg.out.join("truth-model.json"), json.as_bytes())?;
    write_echo(cfg, "synth")?;
    eprintln!(
        "wrote {} days x {} sites to {}",
        record.n_days(),
        record.n_sites(),
        cfg.out.join("record.csv").display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use latgen::model::TruthSpec;

    fn tiny(dir: &Path) -> RunConfig {
        let mut cfg = RunConfig {
            out: dir.to_path_buf(),
            seed: 5,
            ..RunConfig::default()
        };
        cfg.synth.truth = TruthSpec {
            n_sites: 2,
            max_lag: 1,
            ..TruthSpec::default()
        };
        cfg.synth.years = Some(YearRange { start: 1961, end: 1990 });
        cfg.calibration = YearRange { start: 1961, end: 1980 };
        cfg.validation = YearRange { start: 1981, end: 1990 };
        cfg.fit.max_lag = 1;
        cfg.simulate.n_replicates = 3;
        cfg.input = Some(dir.join("record.csv"));
        cfg
    }

    #[test]
    fn pipeline_writes_expected_layout() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny(dir.path());
        cmd_synth(&cfg).unwrap();
        cmd_fit(&cfg).unwrap();
        cmd_simulate(&cfg).unwrap();
        cfg.evaluate.emit_svg = true;
        cmd_evaluate(&cfg).unwrap();
        for f in ["record.csv", "truth-model.json", "model.json", "diagnostics.csv", "manifest.json", "sim/rep-2.csv"] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        for f in ["lag_corr_k1-calibration.csv", "pct_wet-validation.json", "max_dry_run-calibration.svg"] {
            assert!(dir.path().join("reports").join(f).is_file(), "{f}");
        }
        let diag = std::fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
        assert_eq!(diag.lines().count(), 13);
    }

    #[test]
    fn tampered_model_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(dir.path());
        cmd_synth(&cfg).unwrap();
        cmd_fit(&cfg).unwrap();
        let p = dir.path().join("model.json");
        let text = std::fs::read_to_string(&p).unwrap();
        std::fs::write(&p, text.replacen("\"eps2\": 0.05", "\"eps2\": 0.06", 1)).unwrap();
        let err = cmd_simulate(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 4, "{err}");
    }

    #[test]
    fn missing_replicate_names_it() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(dir.path());
        cmd_synth(&cfg).unwrap();
        cmd_fit(&cfg).unwrap();
        cmd_simulate(&cfg).unwrap();
        std::fs::remove_file(dir.path().join("sim/rep-1.csv")).unwrap();
        let err = cmd_evaluate(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 5);
        assert!(err.to_string().contains("replicate 1"), "{err}");
    }

    #[test]
    fn degenerate_site_month_exits_3() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny(dir.path());
        let mut table = vec![[0.3; 12]; 2];
        table[1][6] = 0.0;
        cfg.synth.truth.wet_prob_table = Some(table);
        assert_eq!(cmd_synth(&cfg).unwrap_err().exit_code(), 2);
        cfg.synth.truth.wet_prob_table = None;
        cmd_synth(&cfg).unwrap();
        let p = dir.path().join("record.csv");
        let text = std::fs::read_to_string(&p).unwrap();
        let mut out = String::new();
        for (i, line) in text.lines().enumerate() {
            let cols: Vec<&str> = line.split(',').collect();
            if i > 0 && cols[1] == "7" {
                writeln!(out, "{},{},{},{},0.0", cols[0], cols[1], cols[2], cols[3]).unwrap();
            } else {
                writeln!(out, "{line}").unwrap();
            }
        }
        std::fs::write(&p, out).unwrap();
        let err = cmd_fit(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("S02") && err.to_string().contains("month 7"), "{err}");
    }
}

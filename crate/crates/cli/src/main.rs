//! `latgen`: fit, simulate and evaluate latent-Gaussian precipitation occurrence models.
//!
//! Exit codes: 1 i/o, 2 data or config, 3 estimation, 4 simulation, 5 evaluation.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{RunConfig, YearRange};
use error::CliError;

#[derive(Parser)]
#[command(name = "latgen", version, about = "Multisite precipitation occurrence generator")]
struct Cli {
    /// Config file (TOML, or JSON if the name ends in .json). Flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (outputs do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PeriodArgs {
    /// Calibration years, e.g. 1961-1985.
    #[arg(long, value_parser = parse_years)]
    calibration: Option<YearRange>,
    /// Validation years, e.g. 1986-2001.
    #[arg(long, value_parser = parse_years)]
    validation: Option<YearRange>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a model from a daily depth record.
    Fit {
        /// Daily depth record (year,month,day,<sites>...).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Comma-separated site columns to use, in order.
        #[arg(long, value_delimiter = ',')]
        sites: Option<Vec<String>>,
        /// Wet-day threshold in mm.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        max_lag: Option<usize>,
        /// Eigenvalue floor of the covariance repair.
        #[arg(long)]
        eps2: Option<f64>,
        #[command(flatten)]
        periods: PeriodArgs,
    },
    /// Simulate an ensemble of occurrence records from a fitted model.
    Simulate {
        /// Model file; defaults to <out>/model.json.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Number of replicates.
        #[arg(long, short = 'n')]
        replicates: Option<usize>,
        /// Simulated years, e.g. 1961-2001.
        #[arg(long, value_parser = parse_years)]
        years: Option<YearRange>,
        /// Write states as 1.0/0.0 mm depths.
        #[arg(long)]
        as_depth: bool,
        /// Also write the latent values behind each replicate.
        #[arg(long)]
        keep_latents: bool,
        #[command(flatten)]
        periods: PeriodArgs,
    },
    /// Compare an ensemble against the observed record.
    Evaluate {
        /// Observed depth record.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Manifest; defaults to <out>/manifest.json.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Also write SVG scatter plots.
        #[arg(long)]
        emit_svg: bool,
        #[command(flatten)]
        periods: PeriodArgs,
    },
    /// Generate a synthetic record from a known truth model.
    Synth {
        #[arg(long)]
        n_sites: Option<usize>,
        #[arg(long)]
        max_lag: Option<usize>,
        /// Years to generate, e.g. 1801-2000.
        #[arg(long, value_parser = parse_years)]
        years: Option<YearRange>,
        /// Probability that a cell is written as missing.
        #[arg(long)]
        missing_rate: Option<f64>,
        #[command(flatten)]
        periods: PeriodArgs,
    },
}

fn parse_years(s: &str) -> Result<YearRange, String> {
    let (a, b) = s.split_once(['-', ':']).ok_or_else(|| format!("expected START-END, got {s:?}"))?;
    let start = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let end = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    Ok(YearRange { start, end })
}

fn apply_periods(cfg: &mut RunConfig, p: PeriodArgs) {
    if let Some(c) = p.calibration {
        cfg.calibration = c;
    }
    if let Some(v) = p.validation {
        cfg.validation = v;
    }
}

fn resolve(cli: Cli) -> Result<(RunConfig, &'static str), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = cli.out {
        cfg.out = o;
    }
    cfg.threads = cli.threads;
    let name = match cli.command {
        Command::Fit {
            input,
            sites,
            threshold,
            max_lag,
            eps2,
            periods,
        } => {
            cfg.input = input.or(cfg.input);
            cfg.sites = sites.or(cfg.sites);
            cfg.wet_threshold_mm = threshold.unwrap_or(cfg.wet_threshold_mm);
            cfg.fit.max_lag = max_lag.unwrap_or(cfg.fit.max_lag);
            cfg.fit.eps2 = eps2.unwrap_or(cfg.fit.eps2);
            apply_periods(&mut cfg, periods);
            "fit"
        }
        Command::Simulate {
            model,
            replicates,
            years,
            as_depth,
            keep_latents,
            periods,
        } => {
            cfg.simulate.model = model.or(cfg.simulate.model);
            cfg.simulate.n_replicates = replicates.unwrap_or(cfg.simulate.n_replicates);
            cfg.simulate.years = years.or(cfg.simulate.years);
            cfg.simulate.as_depth |= as_depth;
            cfg.simulate.keep_latents |= keep_latents;
            apply_periods(&mut cfg, periods);
            "simulate"
        }
        Command::Evaluate {
            input,
            manifest,
            emit_svg,
            periods,
        } => {
            cfg.input = input.or(cfg.input);
            cfg.evaluate.manifest = manifest.or(cfg.evaluate.manifest);
            cfg.evaluate.emit_svg |= emit_svg;
            apply_periods(&mut cfg, periods);
            "evaluate"
        }
        Command::Synth {
            n_sites,
            max_lag,
            years,
            missing_rate,
            periods,
        } => {
            if let Some(n) = n_sites {
                cfg.synth.truth.n_sites = n;
            }
            cfg.synth.truth.max_lag = max_lag.unwrap_or(cfg.synth.truth.max_lag);
            cfg.synth.years = years.or(cfg.synth.years);
            cfg.synth.missing_rate = missing_rate.unwrap_or(cfg.synth.missing_rate);
            apply_periods(&mut cfg, periods);
            "synth"
        }
    };
    cfg.validate()?;
    Ok((cfg, name))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (cfg, name) = resolve(cli)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    match name {
        "fit" => commands::cmd_fit(&cfg),
        "simulate" => commands::cmd_simulate(&cfg),
        "evaluate" => commands::cmd_evaluate(&cfg),
        _ => commands::cmd_synth(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("latgen: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

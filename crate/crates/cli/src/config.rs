//! Run configuration: an optional TOML or JSON file, overridden by flags.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use latgen::evaluate::IndexSelection;
use latgen::model::{FitOptions, TruthSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Inclusive range of whole calendar years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearRange {
    pub start: i32,
    pub end: i32,
}

impl YearRange {
    pub fn first_day(&self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.start, 1, 1).unwrap_or(NaiveDate::MIN)
    }

    pub fn last_day(&self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.end, 12, 31).unwrap_or(NaiveDate::MAX)
    }

    fn check(&self, what: &str) -> Result<(), CliError> {
        if self.start > self.end || NaiveDate::from_ymd_opt(self.start, 1, 1).is_none() || NaiveDate::from_ymd_opt(self.end, 12, 31).is_none() {
            return Err(CliError::Config(format!("{what}: invalid year range {}..{}", self.start, self.end)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub max_lag: usize,
    pub eps2: f64,
}

impl Default for FitSection {
    fn default() -> Self {
        let d = FitOptions::default();
        Self {
            max_lag: d.max_lag,
            eps2: d.eps2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    /// Defaults to `<out>/model.json`.
    pub model: Option<PathBuf>,
    pub n_replicates: usize,
    /// Defaults to the calibration start through the validation end.
    pub years: Option<YearRange>,
    pub as_depth: bool,
    /// Also write `sim/latent-<k>.csv` with the latent values behind each state.
    pub keep_latents: bool,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            model: None,
            n_replicates: 1000,
            years: None,
            as_depth: false,
            keep_latents: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    /// Defaults to `<out>/manifest.json`.
    pub manifest: Option<PathBuf>,
    pub indices: IndexSelection,
    /// First month of the winter season.
    pub winter_start: u32,
    pub emit_svg: bool,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        Self {
            manifest: None,
            indices: IndexSelection::default(),
            winter_start: 12,
            emit_svg: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub truth: TruthSpec,
    /// Defaults to the calibration start through the validation end.
    pub years: Option<YearRange>,
    pub missing_rate: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            truth: TruthSpec::default(),
            years: None,
            missing_rate: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Observed depth record (fit, evaluate).
    pub input: Option<PathBuf>,
    /// Restrict the input to these site columns, in this order.
    pub sites: Option<Vec<String>>,
    pub out: PathBuf,
    pub seed: u64,
    pub wet_threshold_mm: f64,
    pub calibration: YearRange,
    pub validation: YearRange,
    pub fit: FitSection,
    pub simulate: SimulateSection,
    pub evaluate: EvaluateSection,
    pub synth: SynthSection,
    /// Worker threads; never echoed, since it must not change any output.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            sites: None,
            out: PathBuf::from("out"),
            seed: 0,
            wet_threshold_mm: FitOptions::default().wet_threshold_mm,
            calibration: YearRange { start: 1961, end: 1985 },
            validation: YearRange { start: 1986, end: 2001 },
            fit: FitSection::default(),
            simulate: SimulateSection::default(),
            evaluate: EvaluateSection::default(),
            synth: SynthSection::default(),
            threads: None,
        }
    }
}

impl RunConfig {
    /// Reads a config file; `.json` is parsed as JSON, anything else as TOML.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.calibration.check("calibration")?;
        self.validation.check("validation")?;
        if let Some(y) = &self.simulate.years {
            y.check("simulate.years")?;
        }
        if let Some(y) = &self.synth.years {
            y.check("synth.years")?;
        }
        if !(self.wet_threshold_mm > 0.0 && self.wet_threshold_mm.is_finite()) {
            return Err(CliError::Config(format!("wet_threshold_mm must be positive, got {}", self.wet_threshold_mm)));
        }
        if !(self.fit.eps2 > 0.0 && self.fit.eps2 < 1.0) {
            return Err(CliError::Config(format!("fit.eps2 must lie in (0, 1), got {}", self.fit.eps2)));
        }
        if self.simulate.n_replicates == 0 {
            return Err(CliError::Config("simulate.n_replicates must be positive".into()));
        }
        if !(1..=12).contains(&self.evaluate.winter_start) {
            return Err(CliError::Config(format!("evaluate.winter_start must be a month, got {}", self.evaluate.winter_start)));
        }
        if let Some(t) = self.threads {
            if t == 0 {
                return Err(CliError::Config("--threads must be positive".into()));
            }
        }
        Ok(())
    }

    /// The span covering both evaluation periods.
    pub fn full_range(&self) -> YearRange {
        YearRange {
            start: self.calibration.start.min(self.validation.start),
            end: self.calibration.end.max(self.validation.end),
        }
    }

    pub fn simulation_years(&self) -> YearRange {
        self.simulate.years.unwrap_or_else(|| self.full_range())
    }

    pub fn synth_years(&self) -> YearRange {
        self.synth.years.unwrap_or_else(|| self.full_range())
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            max_lag: self.fit.max_lag,
            eps2: self.fit.eps2,
            wet_threshold_mm: self.wet_threshold_mm,
        }
    }

    pub fn model_path(&self) -> PathBuf {
        self.simulate.model.clone().unwrap_or_else(|| self.out.join("model.json"))
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.evaluate.manifest.clone().unwrap_or_else(|| self.out.join("manifest.json"))
    }

    pub fn input_path(&self) -> Result<&Path, CliError> {
        self.input
            .as_deref()
            .ok_or_else(|| CliError::Config("no input record given (--input or `input` in the config file)".into()))
    }

    /// The config with every defaulted path and range filled in.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        c.simulate.model = Some(self.model_path());
        c.simulate.years = Some(self.simulation_years());
        c.evaluate.manifest = Some(self.manifest_path());
        c.synth.years = Some(self.synth_years());
        c
    }

    pub fn echo(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.resolved()).expect("config serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!(c.wet_threshold_mm, 1.0);
        assert_eq!(c.fit.max_lag, 2);
        assert_eq!(c.fit.eps2, 0.05);
        assert_eq!(c.simulate.n_replicates, 1000);
        assert_eq!(c.full_range(), YearRange { start: 1961, end: 2001 });
        c.validate().unwrap();
    }

    #[test]
    fn toml_and_json_agree() {
        let t: RunConfig = toml::from_str(
            "seed = 7\ninput = \"r.csv\"\n[fit]\nmax_lag = 1\n[synth.truth]\nn_sites = 3\n[calibration]\nstart = 1970\nend = 1979\n",
        )
        .unwrap();
        let j: RunConfig = serde_json::from_str(
            r#"{"seed": 7, "input": "r.csv", "fit": {"max_lag": 1}, "synth": {"truth": {"n_sites": 3}},
                "calibration": {"start": 1970, "end": 1979}}"#,
        )
        .unwrap();
        assert_eq!(t, j);
        assert_eq!(t.fit.eps2, 0.05);
        assert!(toml::from_str::<RunConfig>("bogus = 1").is_err());
    }

    #[test]
    fn echo_omits_threads() {
        let c = RunConfig {
            threads: Some(3),
            ..RunConfig::default()
        };
        let e = c.echo();
        assert!(!e.contains("threads"));
        let back: RunConfig = serde_json::from_str(&e).unwrap();
        assert_eq!(back, RunConfig { threads: None, ..c }.resolved());
        assert_eq!(back.simulate.model, Some(PathBuf::from("out/model.json")));
    }

    #[test]
    fn bad_ranges_rejected() {
        let c = RunConfig {
            calibration: YearRange { start: 1990, end: 1980 },
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
    }
}

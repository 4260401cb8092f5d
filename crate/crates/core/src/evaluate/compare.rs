use std::cell::OnceCell;

use serde::{Deserialize, Serialize};

use crate::data::{OccurrenceRecord, SeasonMap};

use super::indices::{aggregate_totals, lag_corr_months, season_cells, AggregateTotals, Scale, SeasonCell};
use super::stats::{quantile_sorted, resample_sorted, sort_floats};
use super::EvaluateError;

/// The index families compared between observations and simulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IndexName {
    PctWet,
    LagCorr,
    MaxDryRun,
    AggTotalMean,
    AggTotalStd,
    AggTotalCorr,
}

impl IndexName {
    pub fn label(self) -> &'static str {
        match self {
            IndexName::PctWet => "PCT_WET",
            IndexName::LagCorr => "LAG_CORR",
            IndexName::MaxDryRun => "MAX_DRY_RUN",
            IndexName::AggTotalMean => "AGG_TOTAL_MEAN",
            IndexName::AggTotalStd => "AGG_TOTAL_STD",
            IndexName::AggTotalCorr => "AGG_TOTAL_CORR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComparisonKind {
    /// Sorted observed values against per-rank ensemble medians, per group.
    Qq,
    /// One observed value against the ensemble median per label.
    Scatter,
}

/// Which indices to compute, and the ensemble quantile levels to report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndexSelection {
    pub pct_wet: bool,
    pub max_dry_run: bool,
    pub lags: Vec<usize>,
    pub aggregate_scales: Vec<Scale>,
    pub quantile_levels: Vec<f64>,
}

impl Default for IndexSelection {
    fn default() -> Self {
        Self {
            pct_wet: true,
            max_dry_run: true,
            lags: vec![0, 1, 2],
            aggregate_scales: Scale::ALL.to_vec(),
            quantile_levels: vec![0.05, 0.95],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub label: String,
    pub observed: Option<f64>,
    pub median: Option<f64>,
    /// One entry per requested quantile level.
    pub quantiles: Vec<Option<f64>>,
    /// Largest minus smallest replicate value.
    pub spread: Option<f64>,
}

/// Observed and simulated values of one index family, plus the summary rows.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexComparison {
    pub index: IndexName,
    pub scale: Option<Scale>,
    pub lag: Option<usize>,
    pub kind: ComparisonKind,
    pub labels: Vec<String>,
    pub observed: Vec<Option<f64>>,
    /// `simulated[replicate][label]`.
    pub simulated: Vec<Vec<Option<f64>>>,
    pub summary: Vec<SummaryRow>,
    /// Labels whose observed value is undefined (empty cell or zero variance).
    pub skipped: Vec<String>,
}

impl IndexComparison {
    /// File-name stem, e.g. `lag_corr_k1` or `agg_total_std_season`.
    pub fn stem(&self) -> String {
        let mut s = self.index.label().to_ascii_lowercase();
        if let Some(k) = self.lag {
            s.push_str(&format!("_k{k}"));
        }
        if let Some(sc) = self.scale {
            if matches!(self.index, IndexName::AggTotalMean | IndexName::AggTotalStd | IndexName::AggTotalCorr) {
                s.push('_');
                s.push_str(sc.label());
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleComparison {
    pub n_replicates: usize,
    pub quantile_levels: Vec<f64>,
    pub indices: Vec<IndexComparison>,
}

/// One index family: labels, Q-Q groups (for distribution indices) and an
/// extractor that yields values in label order.
enum Family {
    PctWet,
    MaxDryRun,
    LagCorr(usize),
    Agg(IndexName, Scale),
}

struct Extracted {
    labels: Vec<String>,
    groups: Vec<String>,
    values: Vec<Option<f64>>,
}

/// Per-record intermediates shared by several families.
struct Cache<'a> {
    occ: &'a OccurrenceRecord,
    map: &'a SeasonMap,
    cells: OnceCell<Vec<SeasonCell>>,
    aggregates: [OnceCell<AggregateTotals>; 3],
}

impl<'a> Cache<'a> {
    fn new(occ: &'a OccurrenceRecord, map: &'a SeasonMap) -> Self {
        Self {
            occ,
            map,
            cells: OnceCell::new(),
            aggregates: Default::default(),
        }
    }

    fn cells(&self) -> &[SeasonCell] {
        self.cells.get_or_init(|| season_cells(self.occ, self.map))
    }

    fn aggregate(&self, scale: Scale) -> &AggregateTotals {
        let i = Scale::ALL.iter().position(|&s| s == scale).expect("known scale");
        self.aggregates[i].get_or_init(|| aggregate_totals(self.occ, scale, self.map))
    }
}

/// Values of one family in label order; labels and Q-Q groups are only built
/// when `with_labels` is set.
fn extract(fam: &Family, cache: &Cache, with_labels: bool) -> Extracted {
    let sites = cache.occ.sites();
    let mut labels = Vec::new();
    let mut groups = Vec::new();
    let mut values = Vec::new();
    match fam {
        Family::PctWet | Family::MaxDryRun => {
            for c in cache.cells() {
                if with_labels {
                    labels.push(format!("{}:{}:{}", c.season, c.year, sites[c.site]));
                    groups.push(c.season.label().to_string());
                }
                values.push(match fam {
                    Family::PctWet => c.pct_wet(),
                    _ => (c.wet + c.dry > 0).then_some(c.max_dry_run as f64),
                });
            }
        }
        Family::LagCorr(k) => {
            for (m, month) in lag_corr_months(cache.occ, *k).iter().zip(1..=12u32) {
                for (a, row) in m.iter().enumerate() {
                    for (b, v) in row.iter().enumerate() {
                        if a == b && *k == 0 {
                            continue;
                        }
                        if with_labels {
                            labels.push(format!("M{month:02}:{}:{}", sites[a], sites[b]));
                        }
                        values.push(*v);
                    }
                }
            }
        }
        Family::Agg(index, scale) => {
            let agg = cache.aggregate(*scale);
            for g in &agg.groups {
                match index {
                    IndexName::AggTotalCorr => {
                        for ((a, b), v) in &g.corr {
                            if with_labels {
                                labels.push(format!("{}:{}:{}", g.group, sites[*a], sites[*b]));
                            }
                            values.push(*v);
                        }
                    }
                    _ => {
                        let v = if *index == IndexName::AggTotalMean { &g.mean } else { &g.std };
                        for (site, x) in v.iter().enumerate() {
                            if with_labels {
                                labels.push(format!("{}:{}", g.group, sites[site]));
                            }
                            values.push(*x);
                        }
                    }
                }
            }
        }
    }
    Extracted { labels, groups, values }
}

fn summarize(values: &mut [f64], levels: &[f64]) -> (Option<f64>, Vec<Option<f64>>, Option<f64>) {
    sort_floats(values);
    let median = quantile_sorted(values, 0.5);
    let q = levels.iter().map(|&l| quantile_sorted(values, l)).collect();
    let spread = (!values.is_empty()).then(|| values[values.len() - 1] - values[0]);
    (median, q, spread)
}

fn check_alignment(observed: &OccurrenceRecord, ensemble: &[OccurrenceRecord]) -> Result<(), EvaluateError> {
    for (i, rep) in ensemble.iter().enumerate() {
        let reason = if rep.calendar() != observed.calendar() {
            Some(format!(
                "calendar {}..{:?} differs from observed {}..{:?}",
                rep.calendar().start(),
                rep.calendar().end(),
                observed.calendar().start(),
                observed.calendar().end()
            ))
        } else if rep.sites() != observed.sites() {
            Some("site list differs from observed".to_string())
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(EvaluateError::Alignment { replicate: i, reason });
        }
    }
    Ok(())
}

/// `[replicate][family]` value vectors.
#[cfg(feature = "parallel")]
fn per_replicate(
    ensemble: &[OccurrenceRecord],
    f: impl Fn(&OccurrenceRecord) -> Vec<Vec<Option<f64>>> + Sync,
) -> Vec<Vec<Vec<Option<f64>>>> {
    use rayon::prelude::*;
    ensemble.par_iter().map(&f).collect()
}

#[cfg(not(feature = "parallel"))]
fn per_replicate(
    ensemble: &[OccurrenceRecord],
    f: impl Fn(&OccurrenceRecord) -> Vec<Vec<Option<f64>>>,
) -> Vec<Vec<Vec<Option<f64>>>> {
    ensemble.iter().map(f).collect()
}

fn compare_family(fam: Family, obs: Extracted, simulated: Vec<Vec<Option<f64>>>, levels: &[f64]) -> IndexComparison {
    let (index, scale, lag, kind) = match fam {
        Family::PctWet => (IndexName::PctWet, Some(Scale::Season), None, ComparisonKind::Qq),
        Family::MaxDryRun => (IndexName::MaxDryRun, Some(Scale::Season), None, ComparisonKind::Qq),
        Family::LagCorr(k) => (IndexName::LagCorr, Some(Scale::Month), Some(k), ComparisonKind::Scatter),
        Family::Agg(i, s) => (i, Some(s), None, ComparisonKind::Scatter),
    };
    let skipped = obs
        .labels
        .iter()
        .zip(&obs.values)
        .filter(|(_, v)| v.is_none())
        .map(|(l, _)| l.clone())
        .collect();

    let summary = match kind {
        ComparisonKind::Scatter => obs
            .labels
            .iter()
            .enumerate()
            .map(|(i, label)| {
                let mut vals: Vec<f64> = simulated.iter().filter_map(|r| r[i]).collect();
                let (median, quantiles, spread) = summarize(&mut vals, levels);
                SummaryRow {
                    label: label.clone(),
                    observed: obs.values[i],
                    median,
                    quantiles,
                    spread,
                }
            })
            .collect(),
        ComparisonKind::Qq => {
            let mut group_names: Vec<&String> = Vec::new();
            for g in &obs.groups {
                if !group_names.contains(&g) {
                    group_names.push(g);
                }
            }
            group_names.sort_by_key(|g| crate::data::Season::ALL.iter().position(|s| s.label() == g.as_str()));
            let pool = |values: &[Option<f64>], g: &str| -> Vec<f64> {
                let mut v: Vec<f64> = values
                    .iter()
                    .zip(&obs.groups)
                    .filter(|(_, gg)| gg.as_str() == g)
                    .filter_map(|(x, _)| *x)
                    .collect();
                sort_floats(&mut v);
                v
            };
            let mut rows = Vec::new();
            for g in group_names {
                let obs_sorted = pool(&obs.values, g);
                let n = obs_sorted.len();
                let reps: Vec<Vec<f64>> = simulated.iter().map(|r| resample_sorted(&pool(r, g), n)).collect();
                for (rank, &o) in obs_sorted.iter().enumerate() {
                    let mut vals: Vec<f64> = reps.iter().filter_map(|r| r.get(rank).copied()).collect();
                    let (median, quantiles, spread) = summarize(&mut vals, levels);
                    rows.push(SummaryRow {
                        label: format!("{g}:{}", rank + 1),
                        observed: Some(o),
                        median,
                        quantiles,
                        spread,
                    });
                }
            }
            rows
        }
    };
    IndexComparison {
        index,
        scale,
        lag,
        kind,
        labels: obs.labels,
        observed: obs.values,
        simulated,
        summary,
        skipped,
    }
}

/// Computes the selected indices on the observed record and on every
/// replicate, and summarizes the ensemble against the observations.
pub fn compare(
    observed: &OccurrenceRecord,
    ensemble: &[OccurrenceRecord],
    selection: &IndexSelection,
    map: &SeasonMap,
) -> Result<EnsembleComparison, EvaluateError> {
    if ensemble.is_empty() {
        return Err(EvaluateError::EmptyEnsemble);
    }
    if let Some(&l) = selection.quantile_levels.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(EvaluateError::InvalidSelection(format!("quantile level {l} outside [0, 1]")));
    }
    check_alignment(observed, ensemble)?;
    let levels = &selection.quantile_levels;
    let mut families = Vec::new();
    if selection.pct_wet {
        families.push(Family::PctWet);
    }
    for &k in &selection.lags {
        families.push(Family::LagCorr(k));
    }
    if selection.max_dry_run {
        families.push(Family::MaxDryRun);
    }
    for &sc in &selection.aggregate_scales {
        for i in [IndexName::AggTotalMean, IndexName::AggTotalStd, IndexName::AggTotalCorr] {
            families.push(Family::Agg(i, sc));
        }
    }
    let obs_cache = Cache::new(observed, map);
    let obs: Vec<Extracted> = families.iter().map(|f| extract(f, &obs_cache, true)).collect();
    let mut reps = per_replicate(ensemble, |r| {
        let cache = Cache::new(r, map);
        families.iter().map(|f| extract(f, &cache, false).values).collect()
    });
    let mut indices = Vec::with_capacity(families.len());
    for (i, (fam, obs)) in families.into_iter().zip(obs).enumerate() {
        let simulated = reps.iter_mut().map(|r| std::mem::take(&mut r[i])).collect();
        indices.push(compare_family(fam, obs, simulated, levels));
    }
    Ok(EnsembleComparison {
        n_replicates: ensemble.len(),
        quantile_levels: levels.clone(),
        indices,
    })
}

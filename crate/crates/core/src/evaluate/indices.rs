use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{days_in_month, Occurrence, OccurrenceRecord, Season, SeasonMap};

use super::stats::{mean_std, pearson};

/// Time scale over which aggregated totals are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Month,
    Season,
    Year,
}

impl Scale {
    pub const ALL: [Scale; 3] = [Scale::Month, Scale::Season, Scale::Year];

    pub fn label(self) -> &'static str {
        match self {
            Scale::Month => "month",
            Scale::Season => "season",
            Scale::Year => "year",
        }
    }
}

/// Wet and dry counts plus the longest dry run of one site in one season-year.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeasonCell {
    pub season: Season,
    pub year: i32,
    pub site: usize,
    pub wet: u32,
    pub dry: u32,
    pub max_dry_run: u32,
}

impl SeasonCell {
    pub fn pct_wet(&self) -> Option<f64> {
        let n = self.wet + self.dry;
        (n > 0).then(|| self.wet as f64 / n as f64)
    }
}

/// Scans the record once and returns one cell per (season-year, site), in
/// chronological order. A missing day ends any dry run.
pub fn season_cells(occ: &OccurrenceRecord, map: &SeasonMap) -> Vec<SeasonCell> {
    let cal = occ.calendar();
    let s = occ.n_sites();
    let mut out = Vec::new();
    let mut current: Vec<SeasonCell> = Vec::new();
    let mut runs = vec![0u32; s];
    for t in 0..occ.n_days() {
        let month = cal.month(t);
        let season = map.season(month);
        let year = map.season_year(cal.year(t), month);
        if current.first().is_none_or(|c| c.season != season || c.year != year) {
            out.append(&mut current);
            current = (0..s)
                .map(|site| SeasonCell {
                    season,
                    year,
                    site,
                    wet: 0,
                    dry: 0,
                    max_dry_run: 0,
                })
                .collect();
            runs.iter_mut().for_each(|r| *r = 0);
        }
        for (site, st) in occ.day(t).iter().enumerate() {
            let cell = &mut current[site];
            match st {
                Occurrence::Dry => {
                    cell.dry += 1;
                    runs[site] += 1;
                    cell.max_dry_run = cell.max_dry_run.max(runs[site]);
                }
                Occurrence::Wet => {
                    cell.wet += 1;
                    runs[site] = 0;
                }
                Occurrence::Missing => runs[site] = 0,
            }
        }
    }
    out.append(&mut current);
    out
}

fn window<'a>(occ: &'a OccurrenceRecord, map: &SeasonMap, season: Season, year: i32) -> impl Iterator<Item = usize> + 'a {
    let cal = occ.calendar();
    let map = *map;
    (0..occ.n_days()).filter(move |&t| {
        let m = cal.month(t);
        map.season(m) == season && map.season_year(cal.year(t), m) == year
    })
}

/// Fraction of wet days among non-missing days of one site in one season-year;
/// `None` when every day is missing or the window is outside the record.
pub fn pct_wet(occ: &OccurrenceRecord, map: &SeasonMap, season: Season, year: i32, site: usize) -> Option<f64> {
    let (mut wet, mut n) = (0u32, 0u32);
    for t in window(occ, map, season, year) {
        match occ.state(t, site) {
            Occurrence::Wet => {
                wet += 1;
                n += 1;
            }
            Occurrence::Dry => n += 1,
            Occurrence::Missing => {}
        }
    }
    (n > 0).then(|| wet as f64 / n as f64)
}

/// Longest run of consecutive dry days inside one season-year window.
pub fn max_dry_run(occ: &OccurrenceRecord, map: &SeasonMap, season: Season, year: i32, site: usize) -> u32 {
    let mut best = 0;
    let mut run = 0;
    for t in window(occ, map, season, year) {
        if occ.state(t, site) == Occurrence::Dry {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

/// Running sums `n, sx, sy, sxx, syy, sxy` for a 0/1 correlation.
type Sums = [f64; 6];

#[inline]
fn accumulate(e: &mut Sums, x: f64, y: f64) {
    e[0] += 1.0;
    e[1] += x;
    e[2] += y;
    e[3] += x * x;
    e[4] += y * y;
    e[5] += x * y;
}

fn corr_from_sums(&[n, sx, sy, sxx, syy, sxy]: &Sums) -> Option<f64> {
    if n < 2.0 {
        return None;
    }
    let vx = sxx - sx * sx / n;
    let vy = syy - sy * sy / n;
    if vx <= 0.0 || vy <= 0.0 {
        return None;
    }
    Some(((sxy - sx * sy / n) / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation of site `a` on day `t` with site `b` on day `t - k`, for
/// `t` in `month`. `None` with fewer than two valid pairs or a constant margin.
pub fn lagged_interstation_corr(occ: &OccurrenceRecord, a: usize, b: usize, k: usize, month: u32) -> Option<f64> {
    let cal = occ.calendar();
    let mut sums = [0.0; 6];
    for t in k..occ.n_days() {
        if cal.month(t) != month {
            continue;
        }
        if let (Some(x), Some(y)) = (occ.state(t, a).indicator(), occ.state(t - k, b).indicator()) {
            accumulate(&mut sums, x, y);
        }
    }
    corr_from_sums(&sums)
}

/// All lagged correlations at lag `k`, `[month - 1][a][b]`, computed in one pass.
pub(crate) fn lag_corr_months(occ: &OccurrenceRecord, k: usize) -> Vec<Vec<Vec<Option<f64>>>> {
    let s = occ.n_sites();
    let cal = occ.calendar();
    let mut acc = vec![[0.0f64; 6]; 12 * s * s];
    for t in k..occ.n_days() {
        let base = (cal.month(t) as usize - 1) * s * s;
        let now = occ.day(t);
        let then = occ.day(t - k);
        for a in 0..s {
            let Some(x) = now[a].indicator() else { continue };
            for b in 0..s {
                let Some(y) = then[b].indicator() else { continue };
                accumulate(&mut acc[base + a * s + b], x, y);
            }
        }
    }
    (0..12)
        .map(|m| {
            let base = m * s * s;
            (0..s).map(|a| (0..s).map(|b| corr_from_sums(&acc[base + a * s + b])).collect()).collect()
        })
        .collect()
}

/// Identifies one aggregation period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Period {
    Month { year: i32, month: u32 },
    Season { year: i32, season: Season },
    Year { year: i32 },
}

impl Period {
    /// The group a period's statistics are pooled into: calendar month, season,
    /// or the single annual group.
    pub fn group(&self) -> String {
        match self {
            Period::Month { month, .. } => format!("M{month:02}"),
            Period::Season { season, .. } => season.label().to_string(),
            Period::Year { .. } => "annual".to_string(),
        }
    }

    fn calendar_days(&self, map: &SeasonMap) -> u32 {
        match *self {
            Period::Month { year, month } => days_in_month(year, month),
            Period::Season { year, season } => map
                .months(season)
                .iter()
                .map(|&m| {
                    let cal_year = if map.season_year(year, m) == year { year } else { year - 1 };
                    days_in_month(cal_year, m)
                })
                .sum(),
            Period::Year { year } => (1..=12).map(|m| days_in_month(year, m)).sum(),
        }
    }
}

/// Period totals and their per-group summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateTotals {
    pub scale: Scale,
    /// Fully covered periods, chronological.
    pub periods: Vec<Period>,
    /// `totals[p][site]`: estimated wet-day count, `None` when all days missing.
    pub totals: Vec<Vec<Option<f64>>>,
    pub groups: Vec<GroupSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub group: String,
    pub mean: Vec<Option<f64>>,
    /// Sample standard deviation (n - 1 denominator).
    pub std: Vec<Option<f64>>,
    /// Correlation of period totals for each site pair `a < b`.
    pub corr: Vec<((usize, usize), Option<f64>)>,
}

/// Wet-day totals per period, estimated as the wet fraction over non-missing
/// days times the calendar length of the period.
///
/// Periods not fully inside the record are left out, as are site-periods with
/// no observed day.
pub fn aggregate_totals(occ: &OccurrenceRecord, scale: Scale, map: &SeasonMap) -> AggregateTotals {
    let cal = occ.calendar();
    let s = occ.n_sites();
    let mut order: Vec<Period> = Vec::new();
    let mut counts: Vec<(u32, Vec<(u32, u32)>)> = Vec::new();
    let mut index: BTreeMap<Period, usize> = BTreeMap::new();
    let mut current: Option<(Period, usize)> = None;
    for t in 0..occ.n_days() {
        let (year, month) = (cal.year(t), cal.month(t));
        let p = match scale {
            Scale::Month => Period::Month { year, month },
            Scale::Season => Period::Season {
                year: map.season_year(year, month),
                season: map.season(month),
            },
            Scale::Year => Period::Year { year },
        };
        let i = match current {
            Some((q, i)) if q == p => i,
            _ => {
                let i = *index.entry(p).or_insert_with(|| {
                    order.push(p);
                    counts.push((0, vec![(0, 0); s]));
                    counts.len() - 1
                });
                current = Some((p, i));
                i
            }
        };
        let entry = &mut counts[i];
        entry.0 += 1;
        for (site, st) in occ.day(t).iter().enumerate() {
            match st {
                Occurrence::Wet => {
                    entry.1[site].0 += 1;
                    entry.1[site].1 += 1;
                }
                Occurrence::Dry => entry.1[site].1 += 1,
                Occurrence::Missing => {}
            }
        }
    }
    let mut periods = Vec::new();
    let mut totals = Vec::new();
    for (p, (days, per_site)) in order.into_iter().zip(&counts) {
        let days = *days;
        let len = p.calendar_days(map);
        if days != len {
            continue;
        }
        periods.push(p);
        totals.push(
            per_site
                .iter()
                .map(|&(w, n)| (n > 0).then(|| w as f64 / n as f64 * len as f64))
                .collect(),
        );
    }

    let period_groups: Vec<String> = periods.iter().map(Period::group).collect();
    let mut group_names: Vec<String> = Vec::new();
    for g in &period_groups {
        if !group_names.contains(g) {
            group_names.push(g.clone());
        }
    }
    group_names.sort_by_key(|g| group_rank(g));
    let groups = group_names
        .into_iter()
        .map(|g| {
            let rows: Vec<&Vec<Option<f64>>> =
                period_groups.iter().zip(&totals).filter(|(pg, _)| **pg == g).map(|(_, t)| t).collect();
            let (mut mean, mut std) = (Vec::with_capacity(s), Vec::with_capacity(s));
            for site in 0..s {
                let (m, sd) = mean_std(rows.iter().filter_map(|r| r[site]));
                mean.push(m);
                std.push(sd);
            }
            let mut corr = Vec::new();
            for a in 0..s {
                for b in (a + 1)..s {
                    corr.push(((a, b), pearson(rows.iter().filter_map(|r| Some((r[a]?, r[b]?))))));
                }
            }
            GroupSummary { group: g, mean, std, corr }
        })
        .collect();
    AggregateTotals {
        scale,
        periods,
        totals,
        groups,
    }
}

fn group_rank(g: &str) -> (usize, String) {
    let season = Season::ALL.iter().position(|s| s.label() == g);
    (season.unwrap_or(usize::MAX), g.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Calendar;
    use chrono::NaiveDate;
    use Occurrence::{Dry as D, Missing as M, Wet as W};

    fn one_site(start: NaiveDate, states: Vec<Occurrence>) -> OccurrenceRecord {
        let cal = Calendar::new(start, states.len());
        OccurrenceRecord::new(cal, vec!["x".into()], states).unwrap()
    }

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn pct_wet_counts() {
        // Spring 2001: 92 days.
        let mut st = vec![D; 92];
        st[..30].fill(W);
        let occ = one_site(date(2001, 3, 1), st.clone());
        let map = SeasonMap::default();
        assert!((pct_wet(&occ, &map, Season::Spring, 2001, 0).unwrap() - 30.0 / 92.0).abs() < 1e-15);
        st[..10].fill(M);
        let occ = one_site(date(2001, 3, 1), st);
        assert_eq!(pct_wet(&occ, &map, Season::Spring, 2001, 0).unwrap(), 20.0 / 82.0);
        let occ = one_site(date(2001, 3, 1), vec![M; 92]);
        assert_eq!(pct_wet(&occ, &map, Season::Spring, 2001, 0), None);
    }

    #[test]
    fn dry_runs() {
        let map = SeasonMap::default();
        let occ = one_site(date(2001, 6, 1), vec![D, D, W, D, D, D, W]);
        assert_eq!(max_dry_run(&occ, &map, Season::Summer, 2001, 0), 3);
        let occ = one_site(date(2001, 6, 1), vec![D, D, M, D, D]);
        assert_eq!(max_dry_run(&occ, &map, Season::Summer, 2001, 0), 2);
        // Runs are cut at the season boundary: 31 May + 1..3 June.
        let occ = one_site(date(2001, 5, 31), vec![D, D, D, D, W]);
        assert_eq!(max_dry_run(&occ, &map, Season::Summer, 2001, 0), 3);
        assert_eq!(max_dry_run(&occ, &map, Season::Spring, 2001, 0), 1);
        assert_eq!(max_dry_run(&occ, &map, Season::Fall, 2001, 0), 0);
    }

    #[test]
    fn december_belongs_to_next_winter() {
        let map = SeasonMap::default();
        let occ = one_site(date(2000, 12, 30), vec![D, D, D, W]);
        let cells = season_cells(&occ, &map);
        assert_eq!(cells.len(), 1);
        assert_eq!((cells[0].season, cells[0].year), (Season::Winter, 2001));
        assert_eq!(cells[0].max_dry_run, 3);
    }

    #[test]
    fn lag_corr_basic() {
        let cal = Calendar::new(date(2001, 1, 1), 4);
        let st = vec![W, W, D, D, W, W, D, D];
        let occ = OccurrenceRecord::new(cal, vec!["a".into(), "b".into()], st).unwrap();
        assert_eq!(lagged_interstation_corr(&occ, 0, 1, 0, 1), Some(1.0));
        assert_eq!(lagged_interstation_corr(&occ, 0, 0, 0, 1), Some(1.0));
        assert_eq!(lagged_interstation_corr(&occ, 0, 1, 0, 2), None);
        let m = lag_corr_months(&occ, 1);
        assert_eq!(m[0][0][1], lagged_interstation_corr(&occ, 0, 1, 1, 1));
        assert!(m[1][0][1].is_none());
    }

    #[test]
    fn monthly_totals() {
        // June 2001: 30 days, 10 wet.
        let mut st = vec![D; 30];
        st[..10].fill(W);
        let occ = one_site(date(2001, 6, 1), st.clone());
        let agg = aggregate_totals(&occ, Scale::Month, &SeasonMap::default());
        assert_eq!(agg.totals, vec![vec![Some(10.0)]]);
        // 15 observed, 5 wet.
        let mut st = vec![M; 30];
        st[..5].fill(W);
        st[5..15].fill(D);
        let occ = one_site(date(2001, 6, 1), st);
        let agg = aggregate_totals(&occ, Scale::Month, &SeasonMap::default());
        assert!((agg.totals[0][0].unwrap() - 10.0).abs() < 1e-12);
        // A partial month is skipped.
        let occ = one_site(date(2001, 6, 2), vec![W; 29]);
        assert!(aggregate_totals(&occ, Scale::Month, &SeasonMap::default()).periods.is_empty());
    }

    #[test]
    fn identical_sites_correlate_perfectly() {
        let cal = Calendar::span(date(2001, 1, 1), date(2003, 12, 31));
        let mut rng = crate::numerics::RngStream::new(11, 0);
        let states: Vec<Occurrence> = (0..cal.len())
            .flat_map(|_| {
                let v = if rng.uniform() < 0.4 { W } else { D };
                [v, v]
            })
            .collect();
        let occ = OccurrenceRecord::new(cal, vec!["a".into(), "b".into()], states).unwrap();
        let agg = aggregate_totals(&occ, Scale::Month, &SeasonMap::default());
        assert_eq!(agg.groups.len(), 12);
        for g in &agg.groups {
            let c = g.corr[0].1.unwrap();
            assert!((c - 1.0).abs() < 1e-12, "{c}");
        }
        let yearly = aggregate_totals(&occ, Scale::Year, &SeasonMap::default());
        assert_eq!(yearly.periods.len(), 3);
        let seasonal = aggregate_totals(&occ, Scale::Season, &SeasonMap::default());
        // Winter 2001 and winter 2004 are incomplete.
        assert_eq!(seasonal.periods.len(), 11);
        assert_eq!(seasonal.groups[0].group, "winter");
    }
}

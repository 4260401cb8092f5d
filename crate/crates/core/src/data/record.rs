use chrono::NaiveDate;
use sha2::{Digest, Sha256};

use super::{Calendar, DataError};

/// Wet / dry status of a site-day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Occurrence {
    Dry = 0,
    Wet = 1,
    Missing = 2,
}

impl Occurrence {
    #[inline]
    pub fn is_missing(self) -> bool {
        self == Occurrence::Missing
    }

    /// 1.0 for wet, 0.0 for dry, `None` when missing.
    #[inline]
    pub fn indicator(self) -> Option<f64> {
        match self {
            Occurrence::Dry => Some(0.0),
            Occurrence::Wet => Some(1.0),
            Occurrence::Missing => None,
        }
    }
}

/// Daily multisite precipitation depths (mm); `None` marks a missing value.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecipRecord {
    calendar: Calendar,
    sites: Vec<String>,
    values: Vec<Option<f64>>,
}

impl PrecipRecord {
    /// `values` is day-major: `values[t * n_sites + site]`.
    pub fn new(
        start: NaiveDate,
        sites: Vec<String>,
        values: Vec<Option<f64>>,
    ) -> Result<Self, DataError> {
        let s = sites.len();
        if s == 0 {
            return Err(DataError::NoSites);
        }
        if values.len() % s != 0 {
            return Err(DataError::Shape {
                expected: s,
                got: values.len() % s,
            });
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find_map(|(i, v)| v.filter(|d| !(d.is_finite() && *d >= 0.0)).map(|d| (i, d)))
        {
            return Err(DataError::Parse {
                row: i / s + 1,
                column: sites[i % s].clone(),
                message: format!("invalid depth {v}"),
            });
        }
        let calendar = Calendar::new(start, values.len() / s);
        Ok(Self {
            calendar,
            sites,
            values,
        })
    }

    pub fn calendar(&self) -> &Calendar {
        &self.calendar
    }

    pub fn sites(&self) -> &[String] {
        &self.sites
    }

    pub fn n_days(&self) -> usize {
        self.calendar.len()
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    #[inline]
    pub fn value(&self, t: usize, site: usize) -> Option<f64> {
        self.values[t * self.sites.len() + site]
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }
}

/// Binary occurrence series sharing the calendar and site layout of its source.
#[derive(Debug, Clone, PartialEq)]
pub struct OccurrenceRecord {
    calendar: Calendar,
    sites: Vec<String>,
    states: Vec<Occurrence>,
}

impl OccurrenceRecord {
    /// `states` is day-major: `states[t * n_sites + site]`.
    pub fn new(
        calendar: Calendar,
        sites: Vec<String>,
        states: Vec<Occurrence>,
    ) -> Result<Self, DataError> {
        if sites.is_empty() {
            return Err(DataError::NoSites);
        }
        if states.len() != calendar.len() * sites.len() {
            return Err(DataError::Shape {
                expected: calendar.len() * sites.len(),
                got: states.len(),
            });
        }
        Ok(Self {
            calendar,
            sites,
            states,
        })
    }

    pub fn calendar(&self) -> &Calendar {
        &self.calendar
    }

    pub fn sites(&self) -> &[String] {
        &self.sites
    }

    pub fn n_days(&self) -> usize {
        self.calendar.len()
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    #[inline]
    pub fn state(&self, t: usize, site: usize) -> Occurrence {
        self.states[t * self.sites.len() + site]
    }

    pub fn states(&self) -> &[Occurrence] {
        &self.states
    }

    pub fn day(&self, t: usize) -> &[Occurrence] {
        let s = self.sites.len();
        &self.states[t * s..(t + 1) * s]
    }

    pub fn site_index(&self, name: &str) -> Option<usize> {
        self.sites.iter().position(|s| s == name)
    }

    pub fn missing_count(&self) -> usize {
        self.states.iter().filter(|s| s.is_missing()).count()
    }

    /// Days with dates in `[from, to]` (clipped to the record).
    pub fn between(&self, from: NaiveDate, to: NaiveDate) -> OccurrenceRecord {
        let n = self.n_days();
        let lo = (from - self.calendar.start()).num_days().clamp(0, n as i64) as usize;
        let hi = ((to - self.calendar.start()).num_days() + 1).clamp(lo as i64, n as i64) as usize;
        let s = self.n_sites();
        OccurrenceRecord {
            calendar: self.calendar.slice(lo, hi),
            sites: self.sites.clone(),
            states: self.states[lo * s..hi * s].to_vec(),
        }
    }

    /// Content hash over dates, site names and states.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.calendar.start().to_string().as_bytes());
        h.update((self.n_days() as u64).to_le_bytes());
        for s in &self.sites {
            h.update(s.as_bytes());
            h.update([0u8]);
        }
        h.update(self.states.iter().map(|&s| s as u8).collect::<Vec<_>>());
        hex_digest(h)
    }
}

pub(crate) fn hex_digest(h: Sha256) -> String {
    let bytes = h.finalize();
    let mut out = String::with_capacity(7 + 64);
    out.push_str("sha256:");
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Maps depths to occurrence states: wet iff `depth >= wet_threshold_mm`.
pub fn binarize(record: &PrecipRecord, wet_threshold_mm: f64) -> Result<OccurrenceRecord, DataError> {
    if !(wet_threshold_mm > 0.0 && wet_threshold_mm.is_finite()) {
        return Err(DataError::InvalidThreshold(wet_threshold_mm));
    }
    let states = record
        .values
        .iter()
        .map(|v| match v {
            None => Occurrence::Missing,
            Some(d) if *d >= wet_threshold_mm => Occurrence::Wet,
            Some(_) => Occurrence::Dry,
        })
        .collect();
    Ok(OccurrenceRecord {
        calendar: record.calendar.clone(),
        sites: record.sites.clone(),
        states,
    })
}

/// Days of one calendar month, by index into the full record.
///
/// Indices are global so that lagged pairs can reach back into the previous
/// month.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonthView {
    pub month: u32,
    pub indices: Vec<usize>,
}

pub fn month_slice(occ: &OccurrenceRecord, month: u32) -> Result<MonthView, DataError> {
    month_indices(occ.calendar(), month).map(|indices| MonthView { month, indices })
}

pub(crate) fn month_indices(cal: &Calendar, month: u32) -> Result<Vec<usize>, DataError> {
    if !(1..=12).contains(&month) {
        return Err(DataError::InvalidMonth(month));
    }
    Ok((0..cal.len()).filter(|&t| cal.month(t) == month).collect())
}

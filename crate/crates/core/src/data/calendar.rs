use chrono::{Datelike, Duration, NaiveDate};

/// Contiguous daily calendar starting at `start`.
///
/// Year, month and day-of-month are precomputed per index since every estimator
/// and index filters on them in inner loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Calendar {
    start: NaiveDate,
    years: Vec<i32>,
    months: Vec<u8>,
    days: Vec<u8>,
}

impl Calendar {
    pub fn new(start: NaiveDate, n_days: usize) -> Self {
        let mut years = Vec::with_capacity(n_days);
        let mut months = Vec::with_capacity(n_days);
        let mut days = Vec::with_capacity(n_days);
        let mut d = start;
        for _ in 0..n_days {
            years.push(d.year());
            months.push(d.month() as u8);
            days.push(d.day() as u8);
            d = d.succ_opt().expect("date overflow");
        }
        Self {
            start,
            years,
            months,
            days,
        }
    }

    /// Inclusive span `[start, end]`; empty when `end < start`.
    pub fn span(start: NaiveDate, end: NaiveDate) -> Self {
        let n = (end - start).num_days() + 1;
        Self::new(start, n.max(0) as usize)
    }

    pub fn len(&self) -> usize {
        self.months.len()
    }

    pub fn is_empty(&self) -> bool {
        self.months.is_empty()
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    /// Last date, or `None` for an empty calendar.
    pub fn end(&self) -> Option<NaiveDate> {
        if self.is_empty() {
            None
        } else {
            Some(self.date(self.len() - 1))
        }
    }

    pub fn date(&self, t: usize) -> NaiveDate {
        self.start + Duration::days(t as i64)
    }

    #[inline]
    pub fn year(&self, t: usize) -> i32 {
        self.years[t]
    }

    #[inline]
    pub fn month(&self, t: usize) -> u32 {
        self.months[t] as u32
    }

    #[inline]
    pub fn day(&self, t: usize) -> u32 {
        self.days[t] as u32
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let off = (date - self.start).num_days();
        (off >= 0 && (off as usize) < self.len()).then_some(off as usize)
    }

    /// Sub-calendar for indices `[from, to)`.
    pub fn slice(&self, from: usize, to: usize) -> Calendar {
        Calendar {
            start: self.date(from),
            years: self.years[from..to].to_vec(),
            months: self.months[from..to].to_vec(),
            days: self.days[from..to].to_vec(),
        }
    }
}

/// Number of days in a calendar month.
pub fn days_in_month(year: i32, month: u32) -> u32 {
    let (ny, nm) = if month == 12 { (year + 1, 1) } else { (year, month + 1) };
    let first = NaiveDate::from_ymd_opt(year, month, 1).expect("valid month");
    let next = NaiveDate::from_ymd_opt(ny, nm, 1).expect("valid month");
    (next - first).num_days() as u32
}

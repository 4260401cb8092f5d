use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Season {
    Winter,
    Spring,
    Summer,
    Fall,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Winter, Season::Spring, Season::Summer, Season::Fall];

    pub fn label(self) -> &'static str {
        match self {
            Season::Winter => "winter",
            Season::Spring => "spring",
            Season::Summer => "summer",
            Season::Fall => "fall",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Season {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Assignment of calendar months to four contiguous three-month seasons.
///
/// The default is the climatological DJF / MAM / JJA / SON split. A season that
/// wraps the year end (December in the default) counts toward the following
/// year, so winter 1962 is Dec 1961 through Feb 1962.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeasonMap {
    winter_start: u32,
}

impl Default for SeasonMap {
    fn default() -> Self {
        Self { winter_start: 12 }
    }
}

impl SeasonMap {
    /// Winter starts at `winter_start` (1..=12); the others follow in 3-month blocks.
    pub fn new(winter_start: u32) -> Option<Self> {
        (1..=12).contains(&winter_start).then_some(Self { winter_start })
    }

    /// Position of `month` counted from the winter start, 0..12.
    fn offset(&self, month: u32) -> u32 {
        (month + 12 - self.winter_start) % 12
    }

    pub fn season(&self, month: u32) -> Season {
        Season::ALL[(self.offset(month) / 3) as usize]
    }

    /// Year a `(year, month)` day is credited to for per-year seasonal statistics.
    pub fn season_year(&self, year: i32, month: u32) -> i32 {
        let season = self.season(month);
        let first = (self.winter_start - 1 + 3 * season.index() as u32) % 12 + 1;
        // A block wraps the year end when its first month is later in the year
        // than some of its members; those early members are already "next year".
        let wraps = first + 2 > 12;
        if wraps && month >= first {
            year + 1
        } else {
            year
        }
    }

    pub fn months(&self, season: Season) -> [u32; 3] {
        let first = self.winter_start - 1 + 3 * season.index() as u32;
        [first % 12 + 1, (first + 1) % 12 + 1, (first + 2) % 12 + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_assignment() {
        let m = SeasonMap::default();
        let expect = [
            Season::Winter,
            Season::Winter,
            Season::Spring,
            Season::Spring,
            Season::Spring,
            Season::Summer,
            Season::Summer,
            Season::Summer,
            Season::Fall,
            Season::Fall,
            Season::Fall,
            Season::Winter,
        ];
        for (i, s) in expect.iter().enumerate() {
            assert_eq!(m.season(i as u32 + 1), *s);
        }
        assert_eq!(m.months(Season::Winter), [12, 1, 2]);
        assert_eq!(m.months(Season::Fall), [9, 10, 11]);
    }

    #[test]
    fn december_joins_next_winter() {
        let m = SeasonMap::default();
        assert_eq!(m.season_year(1961, 12), 1962);
        assert_eq!(m.season_year(1962, 1), 1962);
        assert_eq!(m.season_year(1962, 11), 1962);
    }

    #[test]
    fn every_month_in_exactly_one_block() {
        for start in 1..=12 {
            let m = SeasonMap::new(start).unwrap();
            let mut seen = [0; 13];
            for s in Season::ALL {
                for month in m.months(s) {
                    assert_eq!(m.season(month), s);
                    seen[month as usize] += 1;
                }
            }
            assert!(seen[1..].iter().all(|&c| c == 1));
        }
        assert!(SeasonMap::new(0).is_none());
    }

    #[test]
    fn november_winter_wraps_two_months() {
        let m = SeasonMap::new(11).unwrap();
        assert_eq!(m.season_year(2000, 11), 2001);
        assert_eq!(m.season_year(2000, 12), 2001);
        assert_eq!(m.season_year(2001, 1), 2001);
    }
}

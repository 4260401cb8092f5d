use chrono::NaiveDate;

use crate::model::FittedModel;
use crate::numerics::RngStream;
use crate::simulate::{SimulateError, Simulator};

use super::{DataError, Occurrence, PrecipRecord};

/// Synthetic depth record for `years` whole calendar years from `start_year`.
///
/// Occurrence is simulated from `truth`; wet days get 1.0 mm and dry days 0.0,
/// then each cell is independently replaced by a missing value with probability
/// `missing_rate`.
pub fn synth_record(
    truth: &FittedModel,
    start_year: i32,
    years: u32,
    rng: &mut RngStream,
    missing_rate: f64,
) -> Result<PrecipRecord, SimulateError> {
    if !(0.0..=1.0).contains(&missing_rate) {
        return Err(DataError::InvalidMissingRate(missing_rate).into());
    }
    if years == 0 {
        return Err(DataError::Empty.into());
    }
    let start = NaiveDate::from_ymd_opt(start_year, 1, 1)
        .ok_or_else(|| SimulateError::InvalidConfig(format!("start year {start_year} out of range")))?;
    let end = NaiveDate::from_ymd_opt(start_year + years as i32 - 1, 12, 31)
        .ok_or_else(|| SimulateError::InvalidConfig(format!("{years} years from {start_year} out of range")))?;
    let occ = Simulator::new(truth)?.run(start, end, rng)?;
    let values = occ
        .states()
        .iter()
        .map(|&st| {
            if missing_rate > 0.0 && rng.uniform() < missing_rate {
                None
            } else {
                Some(if st == Occurrence::Wet { 1.0 } else { 0.0 })
            }
        })
        .collect();
    Ok(PrecipRecord::new(start, occ.sites().to_vec(), values)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::binarize;
    use crate::model::TruthSpec;

    fn truth(s: usize) -> FittedModel {
        TruthSpec {
            n_sites: s,
            ..TruthSpec::default()
        }
        .to_model()
        .unwrap()
    }

    #[test]
    fn one_year_two_sites() {
        let rec = synth_record(&truth(2), 2001, 1, &mut RngStream::new(1, 0), 0.0).unwrap();
        assert_eq!(rec.n_days(), 365);
        assert_eq!(rec.n_sites(), 2);
        assert_eq!(rec.missing_count(), 0);
    }

    #[test]
    fn missing_fraction_concentrates() {
        // 14 years x 2 sites ~ 10^4 cells; binomial sd ~ 0.003.
        let rec = synth_record(&truth(2), 1990, 14, &mut RngStream::new(2, 0), 0.1).unwrap();
        let frac = rec.missing_count() as f64 / rec.values().len() as f64;
        assert!((frac - 0.1).abs() < 0.01, "{frac}");
    }

    #[test]
    fn binarizes_back_to_simulation() {
        let t = truth(3);
        let start = NaiveDate::from_ymd_opt(1980, 1, 1).unwrap();
        let end = NaiveDate::from_ymd_opt(1981, 12, 31).unwrap();
        let sim = Simulator::new(&t).unwrap().run(start, end, &mut RngStream::new(5, 0)).unwrap();
        let rec = synth_record(&t, 1980, 2, &mut RngStream::new(5, 0), 0.2).unwrap();
        let occ = binarize(&rec, 1.0).unwrap();
        for (a, b) in occ.states().iter().zip(sim.states()) {
            assert!(a.is_missing() || a == b);
        }
    }

    #[test]
    fn rejects_bad_rate() {
        assert!(synth_record(&truth(1), 2000, 1, &mut RngStream::new(0, 0), 1.5).is_err());
    }
}

//! Daily multisite records: ingestion, binarization, calendar partitions and
//! synthetic test data.

mod calendar;
mod io;
mod record;
mod season;
mod synth;

pub use calendar::{days_in_month, Calendar};
pub use io::{load_record, read_occurrence, write_occurrence, write_record, Schema};
pub use record::{binarize, month_slice, MonthView, Occurrence, OccurrenceRecord, PrecipRecord};
pub use season::{Season, SeasonMap};
pub use synth::synth_record;

pub(crate) use record::{hex_digest, month_indices};

use chrono::NaiveDate;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed delimited text: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("row {row}: invalid calendar date")]
    InvalidDate { row: usize },
    #[error("calendar gap: {0} is missing")]
    Gap(NaiveDate),
    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),
    #[error("record has no rows")]
    Empty,
    #[error("record has no site columns")]
    NoSites,
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("invalid month {0}")]
    InvalidMonth(u32),
    #[error("wet threshold must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error("missing rate must be in [0, 1], got {0}")]
    InvalidMissingRate(f64),
}

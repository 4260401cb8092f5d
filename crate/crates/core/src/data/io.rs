//! Delimited text I/O for daily records.
//!
//! Layout: a header `year,month,day,<site1>,...,<siteS>` (comma or tab), one row
//! per day, depths in decimal mm. Missing cells are empty, `NA` or `-Inf`; only
//! `NA` is ever written.

use std::io::{Read, Write};

use chrono::NaiveDate;

use super::{Calendar, DataError, Occurrence, OccurrenceRecord, PrecipRecord};

/// Column mapping for [`load_record`].
#[derive(Debug, Clone)]
pub struct Schema {
    /// `None` detects tab vs comma from the header line.
    pub delimiter: Option<u8>,
    pub year_column: String,
    pub month_column: String,
    pub day_column: String,
    /// Restrict to these site columns, in this order. `None` keeps every
    /// non-date column in file order.
    pub sites: Option<Vec<String>>,
    /// Flag letters that mark a trace amount; such cells load as 0 mm (dry).
    /// Any other trailing flag letter makes the cell missing.
    pub trace_flags: Vec<char>,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            delimiter: None,
            year_column: "year".into(),
            month_column: "month".into(),
            day_column: "day".into(),
            sites: None,
            trace_flags: vec!['T'],
        }
    }
}

fn detect_delimiter(text: &str) -> u8 {
    let header = text.lines().next().unwrap_or("");
    if header.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

fn is_missing_token(cell: &str) -> bool {
    cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("-inf")
}

fn parse_depth(cell: &str, schema: &Schema) -> Result<Option<f64>, String> {
    let cell = cell.trim();
    if is_missing_token(cell) {
        return Ok(None);
    }
    let flag_start = cell
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_ascii_alphabetic())
        .last()
        .map(|(i, _)| i);
    if let Some(i) = flag_start {
        // "inf"/"nan" are letters too; they are not flags.
        let (num, flag) = cell.split_at(i);
        if !flag.eq_ignore_ascii_case("inf") && !flag.eq_ignore_ascii_case("nan") {
            if !num.is_empty() && num.parse::<f64>().is_err() {
                return Err(format!("unparseable value {cell:?}"));
            }
            return Ok(if flag.chars().all(|c| schema.trace_flags.contains(&c)) {
                Some(0.0)
            } else {
                None
            });
        }
    }
    let v: f64 = cell
        .parse()
        .map_err(|_| format!("unparseable value {cell:?}"))?;
    if !v.is_finite() {
        return Err(format!("non-finite depth {cell:?}"));
    }
    if v < 0.0 {
        return Err(format!("negative depth {v}"));
    }
    Ok(Some(v))
}

fn column(headers: &[String], name: &str) -> Result<usize, DataError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| DataError::MissingColumn(name.to_string()))
}

/// Parses a delimited record, sorts it by date and checks the calendar has no gaps.
pub fn load_record<R: Read>(mut source: R, schema: &Schema) -> Result<PrecipRecord, DataError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let delimiter = schema.delimiter.unwrap_or_else(|| detect_delimiter(&text));
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::Headers)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let (yc, mc, dc) = (
        column(&headers, &schema.year_column)?,
        column(&headers, &schema.month_column)?,
        column(&headers, &schema.day_column)?,
    );
    let site_cols: Vec<(usize, String)> = match &schema.sites {
        Some(names) => names
            .iter()
            .map(|n| column(&headers, n).map(|i| (i, n.clone())))
            .collect::<Result<_, _>>()?,
        None => headers
            .iter()
            .enumerate()
            .filter(|(i, _)| ![yc, mc, dc].contains(i))
            .map(|(i, h)| (i, h.clone()))
            .collect(),
    };
    if site_cols.is_empty() {
        return Err(DataError::NoSites);
    }
    let s = site_cols.len();

    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut values: Vec<Option<f64>> = Vec::new();
    let mut rec = csv::StringRecord::new();
    while reader.read_record(&mut rec)? {
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| rec.get(i).unwrap_or("").trim();
        let int = |i: usize| -> Result<i64, DataError> {
            field(i).parse::<i64>().map_err(|_| DataError::Parse {
                row: line,
                column: headers[i].clone(),
                message: format!("expected an integer, found {:?}", field(i)),
            })
        };
        let (y, m, d) = (int(yc)?, int(mc)?, int(dc)?);
        let date = NaiveDate::from_ymd_opt(y as i32, m as u32, d as u32)
            .ok_or(DataError::InvalidDate { row: line })?;
        dates.push(date);
        for (i, name) in &site_cols {
            let v = parse_depth(field(*i), schema).map_err(|message| DataError::Parse {
                row: line,
                column: name.clone(),
                message,
            })?;
            values.push(v);
        }
    }
    if dates.is_empty() {
        return Err(DataError::Empty);
    }
    if !dates.windows(2).all(|w| w[0] <= w[1]) {
        let mut order: Vec<usize> = (0..dates.len()).collect();
        order.sort_by_key(|&i| dates[i]);
        values = order.iter().flat_map(|&i| values[i * s..(i + 1) * s].to_vec()).collect();
        dates = order.iter().map(|&i| dates[i]).collect();
    }
    for w in dates.windows(2) {
        let (prev, next) = (w[0], w[1]);
        if next == prev {
            return Err(DataError::DuplicateDate(next));
        }
        let expected = prev.succ_opt().expect("date overflow");
        if next != expected {
            return Err(DataError::Gap(expected));
        }
    }
    let sites = site_cols.into_iter().map(|(_, n)| n).collect();
    PrecipRecord::new(dates[0], sites, values)
}

fn write_rows<W: Write>(
    out: W,
    calendar: &Calendar,
    sites: &[String],
    mut cell: impl FnMut(usize, usize) -> String,
) -> Result<(), DataError> {
    let mut w = csv::WriterBuilder::new().from_writer(out);
    let mut header = vec!["year".to_string(), "month".into(), "day".into()];
    header.extend(sites.iter().cloned());
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(3 + sites.len());
    for t in 0..calendar.len() {
        row.clear();
        row.push(calendar.year(t).to_string());
        row.push(calendar.month(t).to_string());
        row.push(calendar.day(t).to_string());
        for s in 0..sites.len() {
            row.push(cell(t, s));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes depths with the shortest representation that parses back to the same `f64`.
pub fn write_record<W: Write>(record: &PrecipRecord, out: W) -> Result<(), DataError> {
    write_rows(out, record.calendar(), record.sites(), |t, s| {
        match record.value(t, s) {
            Some(v) => format!("{v:?}"),
            None => "NA".into(),
        }
    })
}

/// Writes states as `1`/`0` (or `1.0`/`0.0` when `as_depth`), missing as `NA`.
pub fn write_occurrence<W: Write>(
    occ: &OccurrenceRecord,
    out: W,
    as_depth: bool,
) -> Result<(), DataError> {
    let (wet, dry) = if as_depth { ("1.0", "0.0") } else { ("1", "0") };
    write_rows(out, occ.calendar(), occ.sites(), |t, s| {
        match occ.state(t, s) {
            Occurrence::Wet => wet,
            Occurrence::Dry => dry,
            Occurrence::Missing => "NA",
        }
        .to_string()
    })
}

/// Reads a record written by [`write_occurrence`]: any value `>= 1` is wet,
/// `0` dry, missing tokens missing.
pub fn read_occurrence<R: Read>(source: R) -> Result<OccurrenceRecord, DataError> {
    let record = load_record(source, &Schema::default())?;
    let states = record
        .values()
        .iter()
        .map(|v| match v {
            None => Occurrence::Missing,
            Some(x) if *x >= 1.0 => Occurrence::Wet,
            Some(_) => Occurrence::Dry,
        })
        .collect();
    OccurrenceRecord::new(record.calendar().clone(), record.sites().to_vec(), states)
}

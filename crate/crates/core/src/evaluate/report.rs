use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use super::{ComparisonKind, IndexComparison, IndexName, Scale, SummaryRow};

pub const REPORT_FORMAT_VERSION: u32 = 1;

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// One row per summary label: observed value, ensemble median, quantiles, spread.
pub fn write_csv<W: Write>(cmp: &IndexComparison, levels: &[f64], mut out: W) -> std::io::Result<()> {
    let mut header = String::from("label,observed,median");
    for l in levels {
        write!(header, ",q{l}").unwrap();
    }
    header.push_str(",spread\n");
    out.write_all(header.as_bytes())?;
    for row in &cmp.summary {
        let mut line = format!("{},{},{}", row.label, cell(row.observed), cell(row.median));
        for q in &row.quantiles {
            line.push(',');
            line.push_str(&cell(*q));
        }
        line.push(',');
        line.push_str(&cell(row.spread));
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    format: &'static str,
    format_version: u32,
    index: IndexName,
    scale: Option<Scale>,
    lag: Option<usize>,
    kind: ComparisonKind,
    period: &'a str,
    n_replicates: usize,
    quantile_levels: &'a [f64],
    skipped: &'a [String],
    rows: &'a [SummaryRow],
}

pub fn to_json(cmp: &IndexComparison, period: &str, levels: &[f64]) -> serde_json::Result<String> {
    let doc = ReportDoc {
        format: "latgen-report",
        format_version: REPORT_FORMAT_VERSION,
        index: cmp.index,
        scale: cmp.scale,
        lag: cmp.lag,
        kind: cmp.kind,
        period,
        n_replicates: cmp.simulated.len(),
        quantile_levels: levels,
        skipped: &cmp.skipped,
        rows: &cmp.summary,
    };
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

/// Observed (x) against ensemble median (y) with the 1:1 line.
pub fn to_svg(cmp: &IndexComparison, title: &str) -> String {
    const SIZE: f64 = 420.0;
    const PAD: f64 = 50.0;
    let pts: Vec<(f64, f64)> = cmp.summary.iter().filter_map(|r| Some((r.observed?, r.median?))).collect();
    let (mut lo, mut hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, y)| (lo.min(x).min(y), hi.max(x).max(y)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let span = SIZE - 2.0 * PAD;
    let sx = |v: f64| PAD + (v - lo) / (hi - lo) * span;
    let sy = |v: f64| SIZE - PAD - (v - lo) / (hi - lo) * span;
    let (xlabel, ylabel) = match cmp.kind {
        ComparisonKind::Qq => ("observed quantile", "ensemble median quantile"),
        ComparisonKind::Scatter => ("observed", "ensemble median"),
    };
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, SIZE / 2.0, escape(title)).unwrap();
    writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{span}" height="{span}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    writeln!(
        s,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999" stroke-dasharray="4 3"/>"##,
        sx(lo),
        sy(lo),
        sx(hi),
        sy(hi)
    )
    .unwrap();
    for (v, anchor_x, anchor_y) in [(lo, PAD, SIZE - PAD + 16.0), (hi, SIZE - PAD, SIZE - PAD + 16.0)] {
        writeln!(s, r#"<text x="{anchor_x}" y="{anchor_y}" text-anchor="middle">{}</text>"#, fmt_tick(v)).unwrap();
    }
    for (v, y) in [(lo, SIZE - PAD), (hi, PAD)] {
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, PAD - 4.0, y + 4.0, fmt_tick(v)).unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#, SIZE / 2.0, SIZE - 12.0).unwrap();
    writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{ylabel}</text>"#,
        SIZE / 2.0,
        SIZE / 2.0
    )
    .unwrap();
    for (x, y) in pts {
        writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="2.2" fill="#1f5fa8" fill-opacity="0.6"/>"##, sx(x), sy(y)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> IndexComparison {
        IndexComparison {
            index: IndexName::LagCorr,
            scale: Some(Scale::Month),
            lag: Some(1),
            kind: ComparisonKind::Scatter,
            labels: vec!["M01:a:b".into(), "M01:b:a".into()],
            observed: vec![Some(0.25), None],
            simulated: vec![vec![Some(0.2), None], vec![Some(0.3), None]],
            summary: vec![
                SummaryRow {
                    label: "M01:a:b".into(),
                    observed: Some(0.25),
                    median: Some(0.25),
                    quantiles: vec![Some(0.2)],
                    spread: Some(0.1),
                },
                SummaryRow {
                    label: "M01:b:a".into(),
                    observed: None,
                    median: None,
                    quantiles: vec![None],
                    spread: None,
                },
            ],
            skipped: vec!["M01:b:a".into()],
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_csv(&sample(), &[0.05], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "label,observed,median,q0.05,spread\nM01:a:b,0.25,0.25,0.2,0.1\nM01:b:a,NA,NA,NA,NA\n");
    }

    #[test]
    fn json_is_tagged() {
        let j = to_json(&sample(), "calibration", &[0.05]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&j).unwrap();
        assert_eq!(v["format_version"], 1);
        assert_eq!(v["index"], "LAG_CORR");
        assert_eq!(v["rows"][1]["observed"], serde_json::Value::Null);
    }

    #[test]
    fn svg_has_points() {
        let svg = to_svg(&sample(), "lag <1>");
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.contains("lag &lt;1&gt;"));
    }
}

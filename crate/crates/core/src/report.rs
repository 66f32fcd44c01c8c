//! CSV and JSON serialization of report rows.

use std::path::Path;
use std::str::FromStr;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::harness::ReportRow;

pub const CSV_HEADER: &str =
    "dataset,model,auc,precision,recall,f1,accuracy,nonzero_params,total_params,tau,wall_time_seconds";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::invalid(format!("unknown report format {other:?}"))),
        }
    }
}

fn fixed(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.6}")
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".into(), fixed)
}

fn number(v: Option<f64>) -> Value {
    match v {
        Some(x) if x.is_finite() => {
            // round-trip through the fixed-point text so both formats agree
            let rounded: f64 = fixed(x).parse().unwrap_or(x);
            json!(rounded)
        }
        _ => Value::Null,
    }
}

/// One CSV line (no trailing newline). Text fields must not contain commas.
pub fn csv_line(r: &ReportRow) -> String {
    [
        r.dataset.clone(),
        r.model.clone(),
        cell(r.auc),
        cell(r.precision),
        cell(r.recall),
        cell(r.f1),
        fixed(r.accuracy),
        r.nonzero_params.to_string(),
        r.total_params.to_string(),
        fixed(r.tau),
        fixed(r.wall_time_seconds),
    ]
    .join(",")
}

pub fn to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&csv_line(r));
        out.push('\n');
    }
    out
}

pub fn to_json(rows: &[ReportRow]) -> String {
    let arr: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "dataset": r.dataset,
                "model": r.model,
                "auc": number(r.auc),
                "precision": number(r.precision),
                "recall": number(r.recall),
                "f1": number(r.f1),
                "accuracy": number(Some(r.accuracy)),
                "nonzero_params": r.nonzero_params,
                "total_params": r.total_params,
                "tau": number(Some(r.tau)),
                "wall_time_seconds": number(Some(r.wall_time_seconds)),
            })
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&Value::Array(arr)).unwrap_or_default();
    s.push('\n');
    s
}

pub fn render(rows: &[ReportRow], format: ReportFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Empty("report rows"));
    }
    Ok(match format {
        ReportFormat::Csv => to_csv(rows),
        ReportFormat::Json => to_json(rows),
    })
}

pub fn write_report(
    rows: &[ReportRow],
    path: impl AsRef<Path>,
    format: ReportFormat,
) -> Result<()> {
    let text = render(rows, format)?;
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_opt(s: &str) -> Result<Option<f64>> {
    if s == "nan" {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| Error::invalid(format!("bad report value {s:?}")))
}

fn parse_num<T: FromStr>(s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::invalid(format!("bad report value {s:?}")))
}

/// Parses text produced by [`to_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::invalid("report CSV header mismatch"));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 11 {
                return Err(Error::Dimension {
                    expected: 11,
                    got: f.len(),
                });
            }
            Ok(ReportRow {
                dataset: f[0].to_string(),
                model: f[1].to_string(),
                auc: parse_opt(f[2])?,
                precision: parse_opt(f[3])?,
                recall: parse_opt(f[4])?,
                f1: parse_opt(f[5])?,
                accuracy: parse_num(f[6])?,
                nonzero_params: parse_num(f[7])?,
                total_params: parse_num(f[8])?,
                tau: parse_num(f[9])?,
                wall_time_seconds: parse_num(f[10])?,
            })
        })
        .collect()
}

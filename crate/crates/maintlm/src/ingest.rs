//! Change-log ingestion: CSV parsing into maintenance records and scalar
//! training samples under a selectable input variant.
//!
//! The canonical input is a fixed 5-column CSV:
//!
//! ```text
//! period,enhancements,corrections,days_enh,days_corr
//! 2007-04,5,5,17,8
//! ```

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

/// Exact header line of the change-log CSV format.
pub const CSV_HEADER: &str = "period,enhancements,corrections,days_enh,days_corr";

/// One period's maintenance activity: counts of enhancements/corrections and
/// the days spent on each.
#[derive(Debug, Clone, PartialEq)]
pub struct MaintenanceRecord {
    /// Opaque period label, unique within a log (e.g. "2007-04").
    pub period_id: String,
    pub enhancements: u32,
    pub corrections: u32,
    pub days_enh: f64,
    pub days_corr: f64,
}

/// Which columns of a record feed the model input and target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputVariant {
    /// x = enhancements, y = days_enh.
    EnhancementsOnly,
    /// x = corrections, y = days_corr.
    CorrectionsOnly,
    /// x = enhancements + corrections, y = days_enh + days_corr.
    Sum,
}

impl InputVariant {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "enh" => Some(Self::EnhancementsOnly),
            "corr" => Some(Self::CorrectionsOnly),
            "sum" => Some(Self::Sum),
            _ => None,
        }
    }
}

impl fmt::Display for InputVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::EnhancementsOnly => "enh",
            Self::CorrectionsOnly => "corr",
            Self::Sum => "sum",
        };
        f.write_str(s)
    }
}

/// One (input, target) training point in whatever units the caller is
/// working in (raw days or normalized).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePair {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing header line (expected `{CSV_HEADER}`)")]
    MissingHeader,
    #[error("bad header line `{0}` (expected `{CSV_HEADER}`)")]
    BadHeader(String),
    #[error("line {line}: expected 5 comma-separated fields, found {found}")]
    ColumnCount { line: usize, found: usize },
    #[error("line {line}: field `{field}` is not a valid {kind}: `{value}`")]
    BadField {
        line: usize,
        field: &'static str,
        kind: &'static str,
        value: String,
    },
    #[error("line {line}: duplicate period id `{period}`")]
    DuplicatePeriod { line: usize, period: String },
    #[error("no records")]
    Empty,
}

fn parse_count(
    raw: &str,
    line: usize,
    field: &'static str,
) -> Result<u32, IngestError> {
    raw.trim().parse::<u32>().map_err(|_| IngestError::BadField {
        line,
        field,
        kind: "nonnegative integer",
        value: raw.to_string(),
    })
}

fn parse_days(raw: &str, line: usize, field: &'static str) -> Result<f64, IngestError> {
    let bad = || IngestError::BadField {
        line,
        field,
        kind: "nonnegative real",
        value: raw.to_string(),
    };
    let v: f64 = raw.trim().parse().map_err(|_| bad())?;
    if !v.is_finite() || v < 0.0 {
        return Err(bad());
    }
    Ok(v)
}

/// Parse a change-log CSV into maintenance records, in file order.
///
/// Accepts LF or CRLF line endings; blank lines are skipped. Line numbers in
/// errors are 1-based and count the header.
pub fn parse_change_log(text: &str) -> Result<Vec<MaintenanceRecord>, IngestError> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim_end_matches('\r').is_empty() => continue,
            Some((_, l)) => break l.trim_end_matches('\r'),
            None => return Err(IngestError::MissingHeader),
        }
    };
    if header != CSV_HEADER {
        return Err(IngestError::BadHeader(header.to_string()));
    }

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw_line) in lines {
        let line_no = idx + 1;
        let line = raw_line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(IngestError::ColumnCount {
                line: line_no,
                found: fields.len(),
            });
        }
        let period = fields[0].trim();
        if period.is_empty() {
            return Err(IngestError::BadField {
                line: line_no,
                field: "period",
                kind: "nonempty label",
                value: fields[0].to_string(),
            });
        }
        if !seen.insert(period.to_string()) {
            return Err(IngestError::DuplicatePeriod {
                line: line_no,
                period: period.to_string(),
            });
        }
        records.push(MaintenanceRecord {
            period_id: period.to_string(),
            enhancements: parse_count(fields[1], line_no, "enhancements")?,
            corrections: parse_count(fields[2], line_no, "corrections")?,
            days_enh: parse_days(fields[3], line_no, "days_enh")?,
            days_corr: parse_days(fields[4], line_no, "days_corr")?,
        });
    }
    Ok(records)
}

/// Serialize records back to the change-log CSV format (header included).
pub fn records_to_csv(records: &[MaintenanceRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.period_id, r.enhancements, r.corrections, r.days_enh, r.days_corr
        ));
    }
    out
}

/// Build (x, y) samples from records under the given variant, preserving
/// record order.
pub fn build_samples(
    records: &[MaintenanceRecord],
    variant: InputVariant,
) -> Result<Vec<SamplePair>, IngestError> {
    if records.is_empty() {
        return Err(IngestError::Empty);
    }
    Ok(records
        .iter()
        .map(|r| match variant {
            InputVariant::EnhancementsOnly => SamplePair {
                x: f64::from(r.enhancements),
                y: r.days_enh,
            },
            InputVariant::CorrectionsOnly => SamplePair {
                x: f64::from(r.corrections),
                y: r.days_corr,
            },
            InputVariant::Sum => SamplePair {
                x: f64::from(r.enhancements + r.corrections),
                y: r.days_enh + r.days_corr,
            },
        })
        .collect())
}

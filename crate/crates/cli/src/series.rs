//! The duration-series artifact: a single-column CSV (`duration` header)
//! whose stock and class identity live in the `{stock}_{class}.csv` file
//! name. Session structure is deliberately absent from this format, so
//! anything that needs within-session adjacency consumes a tape instead.

use std::path::Path;

use clap::ValueEnum;
use durascale_core::tape::{ClassFilter, SessionCalendar, TimeOfDay};

use crate::artifacts::{read_input, sha256_hex, RunManifest};
use crate::error::CliError;

pub const SERIES_HEADER: &str = "duration";

const ALL_FILTERS: [ClassFilter; 3] = [
    ClassFilter::All,
    ClassFilter::Filled,
    ClassFilter::PartiallyFilled,
];

/// Trade-class selector as it appears on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassArg {
    All,
    Filled,
    Partial,
}

impl ClassArg {
    pub fn filter(self) -> ClassFilter {
        match self {
            Self::All => ClassFilter::All,
            Self::Filled => ClassFilter::Filled,
            Self::Partial => ClassFilter::PartiallyFilled,
        }
    }
}

pub fn series_file_name(stock: &str, filter: ClassFilter) -> String {
    format!("{stock}_{}.csv", filter.label())
}

/// Stock and class recovered from a series file name. A stem without a
/// recognized class suffix is an all-trades series named by its stem, so
/// generator output like `s.csv` remains a valid fit input.
pub fn identity_from_path(path: &Path) -> (String, ClassFilter) {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    if let Some((stock, label)) = stem.rsplit_once('_') {
        for f in ALL_FILTERS {
            if label == f.label() {
                return (stock.to_string(), f);
            }
        }
    }
    (stem, ClassFilter::All)
}

/// Shortest round-trip decimal per value, one per line.
pub fn series_to_csv(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 8 + SERIES_HEADER.len() + 1);
    out.push_str(SERIES_HEADER);
    out.push('\n');
    for v in values {
        out.push_str(&format!("{v}\n"));
    }
    out
}

pub fn parse_series(text: &str, origin: &Path) -> Result<Vec<f64>, CliError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == SERIES_HEADER => {}
        _ => {
            return Err(CliError::Data(format!(
                "{}: expected a `{SERIES_HEADER}` header line",
                origin.display()
            )))
        }
    }
    let mut values = Vec::new();
    for (i, line) in lines {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t.parse().map_err(|_| {
            CliError::Data(format!("{}:{}: not a number: {t}", origin.display(), i + 1))
        })?;
        if !v.is_finite() || v < 0.0 {
            return Err(CliError::Data(format!(
                "{}:{}: durations must be finite and nonnegative, got {v}",
                origin.display(),
                i + 1
            )));
        }
        values.push(v);
    }
    Ok(values)
}

/// A series file plus the identity and digest the manifest needs.
pub struct SeriesInput {
    pub stock: String,
    pub class_filter: ClassFilter,
    pub values: Vec<f64>,
    pub digest: String,
}

pub fn read_series(path: &Path) -> Result<SeriesInput, CliError> {
    let text = read_input(path)?;
    let values = parse_series(&text, path)?;
    let (stock, class_filter) = identity_from_path(path);
    Ok(SeriesInput {
        stock,
        class_filter,
        values,
        digest: sha256_hex(text.as_bytes()),
    })
}

/// `default`, or a CSV file with one `open,close` session per line in
/// `HH:MM:SS.cc` times; blank lines and `#` comments are skipped.
pub fn load_calendar(spec: &str, manifest: &mut RunManifest) -> Result<SessionCalendar, CliError> {
    if spec == "default" {
        return Ok(SessionCalendar::default());
    }
    let path = Path::new(spec);
    let text = read_input(path)?;
    manifest.digest_input(path, text.as_bytes());
    let mut sessions = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let (open, close) = t
            .split_once(',')
            .ok_or_else(|| CliError::Data(format!("{spec}:{}: expected `open,close`", i + 1)))?;
        let parse = |s: &str| {
            TimeOfDay::parse(s.trim()).map_err(|e| CliError::Data(format!("{spec}:{}: {e}", i + 1)))
        };
        sessions.push((parse(open)?, parse(close)?));
    }
    SessionCalendar::new(sessions).map_err(|e| CliError::Data(format!("{spec}: {e}")))
}

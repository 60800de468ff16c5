//! Trade tapes, session calendars, and intertrade durations.
//!
//! Timestamps live on a centisecond grid (the tape's native resolution) and
//! every duration is an exact integer count of centiseconds; seconds only
//! appear at the edges of the API as `f64` views. A duration exists only
//! between two consecutive trades inside the same continuous-auction session
//! of the same day; nothing spans the midday break or an overnight gap.

use std::collections::HashMap;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TapeError {
    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("tape contains no trade records")]
    EmptyTape,
    #[error("invalid session calendar: {0}")]
    InvalidCalendar(String),
}

pub const CENTIS_PER_SECOND: u32 = 100;

/// Execution class of a trade as recorded on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TradeClass {
    Filled,
    PartiallyFilled,
}

impl TradeClass {
    fn from_token(tok: &str) -> Option<Self> {
        match tok {
            "F" => Some(Self::Filled),
            "P" => Some(Self::PartiallyFilled),
            _ => None,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Self::Filled => "F",
            Self::PartiallyFilled => "P",
        }
    }
}

/// Which trades participate in duration extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassFilter {
    All,
    Filled,
    PartiallyFilled,
}

impl ClassFilter {
    pub fn matches(self, class: TradeClass) -> bool {
        match self {
            Self::All => true,
            Self::Filled => class == TradeClass::Filled,
            Self::PartiallyFilled => class == TradeClass::PartiallyFilled,
        }
    }

    /// Stable lowercase label used in artifact names and summaries.
    pub fn label(self) -> &'static str {
        match self {
            Self::All => "all",
            Self::Filled => "filled",
            Self::PartiallyFilled => "partial",
        }
    }
}

/// Time of day as centiseconds since midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeOfDay(pub u32);

impl TimeOfDay {
    pub fn from_hms_centi(h: u32, m: u32, s: u32, c: u32) -> Self {
        Self(((h * 60 + m) * 60 + s) * CENTIS_PER_SECOND + c)
    }

    /// Parses `HH:MM:SS.cc` (hour may be one digit). The fractional part must
    /// be exactly two digits: the grid has centisecond resolution and nothing
    /// finer is representable.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut parts = text.split(':');
        let (h, m, rest) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(h), Some(m), Some(rest), None) => (h, m, rest),
            _ => return Err(format!("time '{text}' is not HH:MM:SS.cc")),
        };
        let (s, frac) = rest
            .split_once('.')
            .ok_or_else(|| format!("time '{text}' is missing the fractional part"))?;
        if frac.len() != 2 {
            return Err(format!(
                "time '{text}' must carry exactly two fractional digits (centisecond resolution)"
            ));
        }
        if h.is_empty() || h.len() > 2 || m.len() != 2 || s.len() != 2 {
            return Err(format!("time '{text}' is not HH:MM:SS.cc"));
        }
        let parse_num = |field: &str| {
            field
                .parse::<u32>()
                .map_err(|_| format!("time '{text}' has a non-numeric field"))
        };
        let (h, m, s, c) = (parse_num(h)?, parse_num(m)?, parse_num(s)?, parse_num(frac)?);
        if h >= 24 || m >= 60 || s >= 60 {
            return Err(format!("time '{text}' is out of range"));
        }
        Ok(Self::from_hms_centi(h, m, s, c))
    }
}

impl fmt::Display for TimeOfDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.0 % CENTIS_PER_SECOND;
        let total_s = self.0 / CENTIS_PER_SECOND;
        write!(
            f,
            "{:02}:{:02}:{:02}.{:02}",
            total_s / 3600,
            total_s / 60 % 60,
            total_s % 60,
            c
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradeRecord {
    pub stock: String,
    pub date: NaiveDate,
    pub time: TimeOfDay,
    pub class: TradeClass,
}

/// A parsed tape, sorted by (stock, date, time).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradeTape {
    pub records: Vec<TradeRecord>,
}

pub const TAPE_HEADER: &str = "stock,date,time,class";

/// Parses a CSV tape (`stock,date,time,class`; date `YYYY-MM-DD`, time
/// `HH:MM:SS.cc`, class `F` or `P`). Rows are re-sorted by stock, date, and
/// time, so the input order carries no information. Malformed rows are
/// rejected with their 1-based line number.
pub fn parse_tape(text: &str) -> Result<TradeTape, TapeError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == TAPE_HEADER => {}
        Some((_, header)) => {
            return Err(TapeError::MalformedRow {
                row: 1,
                reason: format!("header must be '{TAPE_HEADER}', got '{}'", header.trim_end()),
            })
        }
        None => return Err(TapeError::EmptyTape),
    }
    let mut date_cache: HashMap<String, NaiveDate> = HashMap::new();
    let mut records = Vec::new();
    for (idx, line) in lines {
        let row = idx + 1;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let bad = |reason: String| TapeError::MalformedRow { row, reason };
        let fields: Vec<&str> = line.split(',').collect();
        let [stock, date, time, class] = fields.as_slice() else {
            return Err(bad(format!("expected 4 fields, got {}", fields.len())));
        };
        if stock.is_empty() {
            return Err(bad("empty stock code".into()));
        }
        let date = match date_cache.get(*date) {
            Some(d) => *d,
            None => {
                let parsed = NaiveDate::parse_from_str(date, "%Y-%m-%d")
                    .map_err(|_| bad(format!("date '{date}' is not YYYY-MM-DD")))?;
                date_cache.insert((*date).to_string(), parsed);
                parsed
            }
        };
        let time = TimeOfDay::parse(time).map_err(bad)?;
        let class = TradeClass::from_token(class)
            .ok_or_else(|| bad(format!("class '{class}' is not F or P")))?;
        records.push(TradeRecord {
            stock: (*stock).to_string(),
            date,
            time,
            class,
        });
    }
    if records.is_empty() {
        return Err(TapeError::EmptyTape);
    }
    records.sort_by(|a, b| {
        a.stock
            .cmp(&b.stock)
            .then(a.date.cmp(&b.date))
            .then(a.time.cmp(&b.time))
    });
    Ok(TradeTape { records })
}

/// Ordered, disjoint continuous-auction sessions within a trading day,
/// closed intervals in centiseconds. The default is the double session
/// 09:30-11:30 and 13:00-15:00; the opening call auction and the cooling
/// period before it are outside every session by construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionCalendar {
    sessions: Vec<(u32, u32)>,
}

impl SessionCalendar {
    pub fn new(sessions: Vec<(TimeOfDay, TimeOfDay)>) -> Result<Self, TapeError> {
        if sessions.is_empty() {
            return Err(TapeError::InvalidCalendar("no sessions".into()));
        }
        let spans: Vec<(u32, u32)> = sessions.iter().map(|(o, c)| (o.0, c.0)).collect();
        for (i, &(open, close)) in spans.iter().enumerate() {
            if open >= close {
                return Err(TapeError::InvalidCalendar(format!(
                    "session {i} opens at or after it closes"
                )));
            }
            if i > 0 && spans[i - 1].1 >= open {
                return Err(TapeError::InvalidCalendar(format!(
                    "session {i} overlaps or touches the previous session"
                )));
            }
        }
        Ok(Self { sessions: spans })
    }

    pub fn sessions(&self) -> &[(u32, u32)] {
        &self.sessions
    }

    /// Index of the session containing `t`, boundaries inclusive.
    pub fn session_of(&self, t: TimeOfDay) -> Option<usize> {
        let i = self.sessions.partition_point(|&(open, _)| open <= t.0);
        if i == 0 {
            return None;
        }
        (t.0 <= self.sessions[i - 1].1).then_some(i - 1)
    }
}

impl Default for SessionCalendar {
    fn default() -> Self {
        Self::new(vec![
            (
                TimeOfDay::from_hms_centi(9, 30, 0, 0),
                TimeOfDay::from_hms_centi(11, 30, 0, 0),
            ),
            (
                TimeOfDay::from_hms_centi(13, 0, 0, 0),
                TimeOfDay::from_hms_centi(15, 0, 0, 0),
            ),
        ])
        .expect("default calendar is valid")
    }
}

/// Intertrade durations of one stock under one class filter.
///
/// `centis` holds every duration in extraction order; `segments` holds the
/// run lengths of durations that came from the same session block, so
/// within-session adjacency survives flattening (`segments` sums to
/// `centis.len()`). Zero durations (simultaneous trades at grid resolution)
/// stay in the series and are counted in `zero_count`; downstream density
/// and fitting stages exclude them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DurationSeries {
    pub stock: String,
    pub class_filter: ClassFilter,
    pub centis: Vec<u32>,
    pub segments: Vec<usize>,
    pub n_trades: u64,
    pub zero_count: u64,
}

impl DurationSeries {
    /// Builds a single-segment series from durations in seconds, rounding to
    /// the centisecond grid. Intended for feeding synthetic durations into
    /// tape fabrication; `n_trades` is the nominal single-session count and
    /// authoritative counts come from re-extraction.
    pub fn from_secs(stock: &str, class_filter: ClassFilter, secs: &[f64]) -> Self {
        let centis: Vec<u32> = secs
            .iter()
            .map(|&s| {
                assert!(
                    s.is_finite() && s >= 0.0 && s * 100.0 < u32::MAX as f64,
                    "duration out of range: {s}"
                );
                (s * 100.0).round() as u32
            })
            .collect();
        let zero_count = centis.iter().filter(|&&c| c == 0).count() as u64;
        let segments = if centis.is_empty() { vec![] } else { vec![centis.len()] };
        Self {
            stock: stock.to_string(),
            class_filter,
            n_trades: centis.len() as u64 + 1,
            zero_count,
            segments,
            centis,
        }
    }

    pub fn durations_secs(&self) -> Vec<f64> {
        self.centis
            .iter()
            .map(|&c| c as f64 / CENTIS_PER_SECOND as f64)
            .collect()
    }

    /// Mean duration in seconds over all durations including zeros; `None`
    /// when the series is empty.
    pub fn mean_secs(&self) -> Option<f64> {
        if self.centis.is_empty() {
            return None;
        }
        let sum: u64 = self.centis.iter().map(|&c| c as u64).sum();
        Some(sum as f64 / (self.centis.len() as f64 * CENTIS_PER_SECOND as f64))
    }

    /// Consecutive duration pairs `(tau_i, tau_{i+1})` in seconds, taken only
    /// inside one session block and only where both entries are positive.
    pub fn successive_positive_pairs(&self) -> Vec<(f64, f64)> {
        let mut pairs = Vec::new();
        let mut start = 0;
        for &len in &self.segments {
            let seg = &self.centis[start..start + len];
            for w in seg.windows(2) {
                if w[0] > 0 && w[1] > 0 {
                    pairs.push((
                        w[0] as f64 / CENTIS_PER_SECOND as f64,
                        w[1] as f64 / CENTIS_PER_SECOND as f64,
                    ));
                }
            }
            start += len;
        }
        pairs
    }
}

/// Extracts per-stock duration series: consecutive differences between
/// matching trades inside each (day, session) block. Trades outside every
/// session are ignored entirely. A block with `n >= 2` matching trades
/// yields exactly `n - 1` durations; smaller blocks yield none.
pub fn extract_durations(
    tape: &TradeTape,
    filter: ClassFilter,
    calendar: &SessionCalendar,
) -> Vec<DurationSeries> {
    let mut out: Vec<DurationSeries> = Vec::new();
    let mut idx = 0;
    while idx < tape.records.len() {
        let stock = &tape.records[idx].stock;
        let end = tape.records[idx..]
            .iter()
            .position(|r| &r.stock != stock)
            .map_or(tape.records.len(), |p| idx + p);
        let mut series = DurationSeries {
            stock: stock.clone(),
            class_filter: filter,
            centis: Vec::new(),
            segments: Vec::new(),
            n_trades: 0,
            zero_count: 0,
        };
        let mut prev: Option<(NaiveDate, usize, u32)> = None;
        let mut seg_len = 0usize;
        for rec in &tape.records[idx..end] {
            if !filter.matches(rec.class) {
                continue;
            }
            let Some(sess) = calendar.session_of(rec.time) else {
                continue;
            };
            series.n_trades += 1;
            match prev {
                Some((d, s, t)) if d == rec.date && s == sess => {
                    let dur = rec.time.0 - t;
                    if dur == 0 {
                        series.zero_count += 1;
                    }
                    series.centis.push(dur);
                    seg_len += 1;
                }
                _ => {
                    if seg_len > 0 {
                        series.segments.push(seg_len);
                        seg_len = 0;
                    }
                }
            }
            prev = Some((rec.date, sess, rec.time.0));
        }
        if seg_len > 0 {
            series.segments.push(seg_len);
        }
        out.push(series);
        idx = end;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub stock: String,
    pub class_filter: ClassFilter,
    pub n_trades: u64,
    pub zero_count: u64,
    pub mean_duration: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapeSummary {
    pub rows: Vec<SummaryRow>,
}

impl TapeSummary {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stock,class,n_trades,n_zero,mean_duration\n");
        for r in &self.rows {
            let mean = r
                .mean_duration
                .map_or_else(|| "NA".to_string(), |m| m.to_string());
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.stock,
                r.class_filter.label(),
                r.n_trades,
                r.zero_count,
                mean
            ));
        }
        out
    }
}

/// Per-series trade counts, zero-duration counts, and mean durations.
pub fn summarize(series: &[DurationSeries]) -> TapeSummary {
    let rows = series
        .iter()
        .map(|s| SummaryRow {
            stock: s.stock.clone(),
            class_filter: s.class_filter,
            n_trades: s.n_trades,
            zero_count: s.zero_count,
            mean_duration: s.mean_secs(),
        })
        .collect();
    TapeSummary { rows }
}

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use durascale_core::tape::{
    extract_durations, parse_tape, summarize, ClassFilter, DurationSeries, SessionCalendar,
    TapeSummary,
};

use crate::artifacts::{read_input, write_atomic, RunManifest};
use crate::error::CliError;
use crate::parallel::par_map;
use crate::series::{load_calendar, series_file_name, series_to_csv};

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Trade tape CSV (stock,date,time,class)
    #[arg(long)]
    pub tape: PathBuf,
    /// `default` for the double session, or a session CSV file
    #[arg(long, default_value = "default")]
    pub calendar: String,
    /// Output directory for series artifacts and the summary
    #[arg(long)]
    pub out: PathBuf,
}

/// Durations for every stock under every class filter, in stock-major
/// order with classes grouped per stock. The per-filter extractions are
/// independent, so they run in parallel.
pub fn extract_all(
    tape: &durascale_core::tape::TradeTape,
    calendar: &SessionCalendar,
) -> (Vec<DurationSeries>, TapeSummary) {
    let filters = [
        ClassFilter::All,
        ClassFilter::Filled,
        ClassFilter::PartiallyFilled,
    ];
    let per_filter = par_map(&filters, |&f| extract_durations(tape, f, calendar));
    let stocks = per_filter[0].len();
    let mut ordered = Vec::with_capacity(stocks * filters.len());
    for i in 0..stocks {
        for series in &per_filter {
            ordered.push(series[i].clone());
        }
    }
    let summary = summarize(&ordered);
    (ordered, summary)
}

/// Shared tape-loading front end for ingest and summarize.
pub fn load_tape(
    tape_path: &Path,
    calendar_spec: &str,
    manifest: &mut RunManifest,
) -> Result<(durascale_core::tape::TradeTape, SessionCalendar), CliError> {
    let text = read_input(tape_path)?;
    manifest.digest_input(tape_path, text.as_bytes());
    let calendar = load_calendar(calendar_spec, manifest)?;
    let tape = parse_tape(&text).map_err(|e| CliError::Data(e.to_string()))?;
    Ok((tape, calendar))
}

pub fn run(args: &IngestArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new(
        "ingest",
        serde_json::json!({
            "tape": args.tape.display().to_string(),
            "calendar": args.calendar,
            "out": args.out.display().to_string(),
        }),
    );
    let (tape, calendar) = load_tape(&args.tape, &args.calendar, &mut manifest)?;
    let (ordered, summary) = extract_all(&tape, &calendar);

    let series_dir = args.out.join("series");
    fs::create_dir_all(&series_dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", series_dir.display())))?;
    for s in &ordered {
        let name = series_file_name(&s.stock, s.class_filter);
        write_atomic(
            &series_dir.join(&name),
            series_to_csv(&s.durations_secs()).as_bytes(),
        )?;
        manifest.outputs.push(format!("series/{name}"));
    }
    write_atomic(&args.out.join("summary.csv"), summary.to_csv().as_bytes())?;
    manifest.outputs.push("summary.csv".into());
    manifest.write(&args.out)
}

use std::fs;
use std::path::PathBuf;

use clap::Args;

use crate::artifacts::{write_atomic, RunManifest};
use crate::cmd::ingest::{extract_all, load_tape};
use crate::error::CliError;

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// Trade tape CSV (stock,date,time,class)
    #[arg(long)]
    pub tape: PathBuf,
    /// `default` for the double session, or a session CSV file
    #[arg(long, default_value = "default")]
    pub calendar: String,
    /// Output directory for summary.csv
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &SummarizeArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new(
        "summarize",
        serde_json::json!({
            "tape": args.tape.display().to_string(),
            "calendar": args.calendar,
            "out": args.out.display().to_string(),
        }),
    );
    let (tape, calendar) = load_tape(&args.tape, &args.calendar, &mut manifest)?;
    let (_, summary) = extract_all(&tape, &calendar);

    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", args.out.display())))?;
    write_atomic(&args.out.join("summary.csv"), summary.to_csv().as_bytes())?;
    manifest.outputs.push("summary.csv".into());
    manifest.write(&args.out)
}

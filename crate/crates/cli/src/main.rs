//! Command-line pipeline over the durascale-core library: tape ingestion,
//! per-stock normalization and collapse diagnostics, Weibull and
//! q-exponential calibration, conditional structure, seeded synthetic
//! generation, and report assembly. Every run writes a manifest that makes
//! its outputs reproducible from the inputs alone.

mod artifacts;
mod cmd;
mod error;
mod parallel;
mod series;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "durascale", version, about = "Intertrade-duration analysis pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a trade tape into per-stock duration series plus a summary
    Ingest(cmd::ingest::IngestArgs),
    /// Summarize a tape without writing series artifacts
    Summarize(cmd::summarize::SummarizeArgs),
    /// Normalize series by their sample sigma and quantify scaling collapse
    Collapse(cmd::collapse::CollapseArgs),
    /// Calibrate Weibull and q-exponential models on one series
    Fit(cmd::fit::FitArgs),
    /// Quintile-conditioned densities and the conditional mean profile
    Conditional(cmd::conditional::ConditionalArgs),
    /// Draw seeded synthetic durations, optionally as a fabricated tape
    Synth(cmd::synth::SynthArgs),
    /// Aggregate fit artifacts into ensemble and per-stock tables
    Report(cmd::report::ReportArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version render through clap's error path but are
            // successes; everything else is a usage error
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Ingest(a) => cmd::ingest::run(a),
        Command::Summarize(a) => cmd::summarize::run(a),
        Command::Collapse(a) => cmd::collapse::run(a),
        Command::Fit(a) => cmd::fit::run(a),
        Command::Conditional(a) => cmd::conditional::run(a),
        Command::Synth(a) => cmd::synth::run(a),
        Command::Report(a) => cmd::report::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("durascale: {e}");
            e.exit_code()
        }
    }
}

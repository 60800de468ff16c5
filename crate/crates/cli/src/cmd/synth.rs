use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use durascale_core::models::{QExpParams, WeibullParams};
use durascale_core::synth::{
    fabricate_tape, AcdParams, GeneratorConfig, GeneratorModel, Innovation, RNG_ALGORITHM,
};
use durascale_core::tape::{ClassFilter, DurationSeries, SessionCalendar};

use crate::artifacts::{manifest_dir, write_atomic, RunManifest};
use crate::error::CliError;
use crate::series::series_to_csv;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenModelArg {
    Weibull,
    Qexp,
    Acd,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Generator family
    #[arg(long, value_enum)]
    pub model: GenModelArg,
    /// Comma-separated parameters: weibull `alpha=..,beta=..`, qexp
    /// `mu=..,q=..`, acd `omega=..,a=..,b=..[,innovation=exponential|weibull:SHAPE]`
    #[arg(long)]
    pub params: String,
    /// Sample count
    #[arg(long)]
    pub n: usize,
    /// Generator seed; required, a run is never silently clock-seeded
    #[arg(long)]
    pub seed: u64,
    /// Output file: a duration CSV, or a trade tape with --as-tape
    #[arg(long)]
    pub out: PathBuf,
    /// Fabricate a tape whose re-extraction recovers the sample (at
    /// centisecond resolution, for durations fitting inside one session)
    #[arg(long)]
    pub as_tape: bool,
    /// Stock code stamped on fabricated tapes
    #[arg(long, default_value = "SYN001")]
    pub stock: String,
}

fn parse_kv(params: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for piece in params.split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        let (k, v) = piece.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("--params entry `{piece}` is not key=value"))
        })?;
        if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(CliError::Usage(format!("--params repeats `{}`", k.trim())));
        }
    }
    Ok(map)
}

fn take_f64(map: &mut BTreeMap<String, String>, key: &str) -> Result<f64, CliError> {
    let raw = map
        .remove(key)
        .ok_or_else(|| CliError::Usage(format!("--params is missing `{key}`")))?;
    raw.parse()
        .map_err(|_| CliError::Usage(format!("--params `{key}={raw}` is not a number")))
}

fn parse_innovation(raw: &str) -> Result<Innovation, CliError> {
    if raw == "exponential" {
        return Ok(Innovation::Exponential);
    }
    if let Some(shape) = raw.strip_prefix("weibull:") {
        let beta: f64 = shape.parse().map_err(|_| {
            CliError::Usage(format!("innovation shape `{shape}` is not a number"))
        })?;
        return Ok(Innovation::Weibull { beta });
    }
    Err(CliError::Usage(format!(
        "innovation `{raw}` is not exponential or weibull:SHAPE"
    )))
}

/// Model built from the flag pair; unknown or missing keys are usage
/// errors, as are parameter values the model itself rejects.
pub fn build_model(model: GenModelArg, params: &str) -> Result<GeneratorModel, CliError> {
    let mut map = parse_kv(params)?;
    let usage = |e: durascale_core::models::ModelError| CliError::Usage(e.to_string());
    let built = match model {
        GenModelArg::Weibull => {
            let (alpha, beta) = (take_f64(&mut map, "alpha")?, take_f64(&mut map, "beta")?);
            GeneratorModel::Weibull(WeibullParams::new(alpha, beta).map_err(usage)?)
        }
        GenModelArg::Qexp => {
            let (mu, q) = (take_f64(&mut map, "mu")?, take_f64(&mut map, "q")?);
            GeneratorModel::QExponential(QExpParams::new(mu, q).map_err(usage)?)
        }
        GenModelArg::Acd => {
            let omega = take_f64(&mut map, "omega")?;
            let a = take_f64(&mut map, "a")?;
            let b = take_f64(&mut map, "b")?;
            let innovation = match map.remove("innovation") {
                Some(raw) => parse_innovation(&raw)?,
                None => Innovation::Exponential,
            };
            GeneratorModel::Acd(AcdParams::new(omega, a, b, innovation).map_err(usage)?)
        }
    };
    if let Some(key) = map.keys().next() {
        return Err(CliError::Usage(format!(
            "--params has no `{key}` for this model"
        )));
    }
    Ok(built)
}

pub fn run(args: &SynthArgs) -> Result<(), CliError> {
    let model = build_model(args.model, &args.params)?;
    let config = GeneratorConfig::new(model.clone(), args.n, args.seed)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let values = config.generate();

    let body = if args.as_tape {
        let series = DurationSeries::from_secs(&args.stock, ClassFilter::All, &values);
        fabricate_tape(std::slice::from_ref(&series), &SessionCalendar::default())
    } else {
        series_to_csv(&values)
    };
    write_atomic(&args.out, body.as_bytes())?;

    let mut manifest = RunManifest::new(
        "synth",
        serde_json::json!({
            "model": model,
            "n": args.n,
            "seed": args.seed,
            "as_tape": args.as_tape,
            "stock": args.stock,
            "out": args.out.display().to_string(),
        }),
    );
    manifest.seeds.push(args.seed);
    manifest.rng_algorithm = Some(RNG_ALGORITHM);
    manifest
        .outputs
        .push(args.out.file_name().unwrap_or_default().to_string_lossy().into_owned());
    manifest.write(manifest_dir(&args.out))
}

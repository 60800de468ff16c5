use std::path::PathBuf;

use clap::{Args, ValueEnum};
use durascale_core::densities::{estimate_density, DEFAULT_BINS_PER_DECADE};
use durascale_core::fitters::{
    fit_nlse_qexp, fit_nlse_weibull, fit_qexp_mle, fit_weibull_mle, Estimator, FitError,
    FitResult, ModelKind,
};
use durascale_core::models::{QExpParams, WeibullParams};
use serde::{Deserialize, Serialize};

use crate::artifacts::{manifest_dir, write_atomic, RunManifest};
use crate::error::CliError;
use crate::series::read_series;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Weibull,
    Qexp,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Mle,
    Nlse,
    Both,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Duration-series CSV to calibrate
    #[arg(long)]
    pub series: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelArg::Both)]
    pub model: ModelArg,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Both)]
    pub estimator: EstimatorArg,
    /// Log-binning for the least-squares objective and residuals
    #[arg(long, default_value_t = DEFAULT_BINS_PER_DECADE)]
    pub bins_per_decade: u32,
    /// Output JSON file
    #[arg(long)]
    pub out: PathBuf,
}

/// A fit that produced no usable result, kept in the artifact so a partial
/// run stays auditable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitFailure {
    pub model: ModelKind,
    pub estimator: Estimator,
    pub error: String,
}

/// One calibration run over one series: everything a report needs to
/// aggregate or audit.
#[derive(Debug, Serialize, Deserialize)]
pub struct FitFile {
    pub series: String,
    pub class: String,
    pub source: String,
    pub source_digest: String,
    pub n_values: usize,
    pub bins_per_decade: u32,
    pub results: Vec<FitResult>,
    pub failures: Vec<FitFailure>,
}

fn is_data_error(e: &FitError) -> bool {
    matches!(
        e,
        FitError::TooFewSamples { .. }
            | FitError::BadValue(_)
            | FitError::DegenerateSample
            | FitError::InsufficientBins { .. }
    )
}

pub fn run(args: &FitArgs) -> Result<(), CliError> {
    if args.bins_per_decade == 0 {
        return Err(CliError::Usage("--bins-per-decade must be at least 1".into()));
    }
    let input = read_series(&args.series)?;
    let values: Vec<f64> = input.values.iter().copied().filter(|&v| v > 0.0).collect();
    if values.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no positive durations to fit",
            args.series.display()
        )));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;

    let models: &[ModelKind] = match args.model {
        ModelArg::Weibull => &[ModelKind::Weibull],
        ModelArg::Qexp => &[ModelKind::QExponential],
        ModelArg::Both => &[ModelKind::Weibull, ModelKind::QExponential],
    };
    let want_mle = matches!(args.estimator, EstimatorArg::Mle | EstimatorArg::Both);
    let want_nlse = matches!(args.estimator, EstimatorArg::Nlse | EstimatorArg::Both);

    let mut results: Vec<FitResult> = Vec::new();
    let mut failures: Vec<FitFailure> = Vec::new();
    let origin = args.series.display();

    for &model in models {
        // the likelihood fit doubles as the least-squares starting point,
        // so it runs for every requested model either way
        let mle = match model {
            ModelKind::Weibull => fit_weibull_mle(&values),
            ModelKind::QExponential => fit_qexp_mle(&values),
        };
        let mle_result = match mle {
            Ok(r) => Some(r),
            // boundary diagnosis: the attached exponential fit is the
            // result, flagged converged=false
            Err(FitError::TailTooLight { fallback }) => Some(*fallback),
            Err(e) if is_data_error(&e) => {
                return Err(CliError::Data(format!("{origin}: {e}")))
            }
            Err(e) => {
                failures.push(FitFailure {
                    model,
                    estimator: Estimator::Mle,
                    error: e.to_string(),
                });
                None
            }
        };
        if want_mle {
            results.extend(mle_result.clone());
        }
        if want_nlse {
            let density = estimate_density(&values, args.bins_per_decade)
                .map_err(|e| CliError::Data(format!("{origin}: {e}")))?;
            let nlse = match model {
                ModelKind::Weibull => {
                    let init = mle_result
                        .as_ref()
                        .and_then(|r| r.params.as_weibull())
                        .unwrap_or_else(|| {
                            WeibullParams::new(1.0 / mean, 1.0).expect("positive mean")
                        });
                    fit_nlse_weibull(&density, &init)
                }
                ModelKind::QExponential => {
                    let init = mle_result
                        .as_ref()
                        .and_then(|r| r.params.as_qexp())
                        .unwrap_or_else(|| {
                            QExpParams::new(1.0 / mean, 1.2).expect("positive mean")
                        });
                    fit_nlse_qexp(&density, &init)
                }
            };
            match nlse {
                Ok(r) => results.push(r),
                Err(e) if is_data_error(&e) => {
                    return Err(CliError::Data(format!("{origin}: {e}")))
                }
                Err(e) => failures.push(FitFailure {
                    model,
                    estimator: Estimator::Nlse,
                    error: e.to_string(),
                }),
            }
        }
    }

    let file = FitFile {
        series: input.stock,
        class: input.class_filter.label().to_string(),
        source: args.series.display().to_string(),
        source_digest: input.digest.clone(),
        n_values: values.len(),
        bins_per_decade: args.bins_per_decade,
        results,
        failures,
    };
    let body = serde_json::to_string_pretty(&file).expect("fit file serializes") + "\n";
    write_atomic(&args.out, body.as_bytes())?;

    let mut manifest = RunManifest::new(
        "fit",
        serde_json::json!({
            "series": file.source,
            "model": format!("{:?}", args.model),
            "estimator": format!("{:?}", args.estimator),
            "bins_per_decade": args.bins_per_decade,
            "out": args.out.display().to_string(),
        }),
    );
    manifest.bins_per_decade = Some(args.bins_per_decade);
    manifest
        .input_digests
        .insert(file.source.clone(), input.digest);
    let mut defs: Vec<String> = file
        .results
        .iter()
        .map(|r| r.residual_definition.clone())
        .collect();
    defs.sort();
    defs.dedup();
    manifest.residual_definitions = defs;
    manifest
        .outputs
        .push(args.out.file_name().unwrap_or_default().to_string_lossy().into_owned());
    manifest.write(manifest_dir(&args.out))?;

    let unconverged: Vec<String> = file
        .failures
        .iter()
        .map(|f| format!("{:?}/{:?}", f.model, f.estimator))
        .chain(
            file.results
                .iter()
                .filter(|r| !r.converged)
                .map(|r| format!("{:?}/{:?}", r.model, r.estimator)),
        )
        .collect();
    if unconverged.is_empty() {
        Ok(())
    } else {
        Err(CliError::NonConvergence(format!(
            "unconverged fits ({}); partial results written to {}",
            unconverged.join(", "),
            args.out.display()
        )))
    }
}

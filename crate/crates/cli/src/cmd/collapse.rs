use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use durascale_core::densities::{
    collapse_report, estimate_density, pool, sample_std, CollapseReport, EmpiricalCcdf,
    NormalizedSeries, DEFAULT_BINS_PER_DECADE,
};
use serde::{Deserialize, Serialize};

use crate::artifacts::{manifest_dir, write_atomic, RunManifest};
use crate::error::CliError;
use crate::parallel::par_map;
use crate::series::{identity_from_path, read_series, ClassArg};

#[derive(Debug, Args)]
pub struct CollapseArgs {
    /// Series CSV files or directories of them
    #[arg(long, required = true, num_args = 1..)]
    pub series: Vec<PathBuf>,
    /// Which class of series files to include
    #[arg(long, value_enum, default_value_t = ClassArg::All)]
    pub class: ClassArg,
    #[arg(long, default_value_t = DEFAULT_BINS_PER_DECADE)]
    pub bins_per_decade: u32,
    /// Significance level for the pairwise collapse verdict
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    /// Output JSON report; the pooled density and CCDF land beside it
    #[arg(long)]
    pub out: PathBuf,
}

/// The collapse artifact: verdict plus the full pairwise evidence.
#[derive(Debug, Serialize, Deserialize)]
pub struct CollapseFile {
    pub class: String,
    pub bins_per_decade: u32,
    pub alpha: f64,
    pub collapsed: bool,
    pub sigmas: Vec<f64>,
    pub report: CollapseReport,
}

/// Expands files and directories into a sorted list of series CSV paths
/// of the requested class.
pub fn collect_series_paths(
    roots: &[PathBuf],
    class: ClassArg,
) -> Result<Vec<PathBuf>, CliError> {
    let mut paths = Vec::new();
    for root in roots {
        if root.is_dir() {
            let entries = fs::read_dir(root)
                .map_err(|e| CliError::Data(format!("cannot read {}: {e}", root.display())))?;
            for entry in entries {
                let path = entry
                    .map_err(|e| CliError::Data(format!("cannot read {}: {e}", root.display())))?
                    .path();
                let is_csv = path.extension().is_some_and(|x| x == "csv");
                if is_csv && identity_from_path(&path).1 == class.filter() {
                    paths.push(path);
                }
            }
        } else {
            paths.push(root.clone());
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Data(format!(
            "no {:?}-class series files under the given paths",
            class
        )));
    }
    Ok(paths)
}

/// Reads one series and rescales its positive durations by their sample
/// standard deviation.
fn normalize_file(path: &Path) -> Result<(NormalizedSeries, String, String), CliError> {
    let input = read_series(path)?;
    let positive: Vec<f64> = input.values.iter().copied().filter(|&v| v > 0.0).collect();
    if positive.len() < 2 {
        return Err(CliError::Data(format!(
            "{}: need at least 2 positive durations to normalize",
            path.display()
        )));
    }
    let sigma = sample_std(&positive);
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(CliError::Data(format!(
            "{}: degenerate series, sigma is not positive",
            path.display()
        )));
    }
    Ok((
        NormalizedSeries {
            stock: input.stock,
            class_filter: input.class_filter,
            values: positive.iter().map(|v| v / sigma).collect(),
            sigma: Some(sigma),
        },
        path.display().to_string(),
        input.digest,
    ))
}

pub fn run(args: &CollapseArgs) -> Result<(), CliError> {
    if args.bins_per_decade == 0 {
        return Err(CliError::Usage("--bins-per-decade must be at least 1".into()));
    }
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::Usage(format!(
            "--alpha must lie strictly between 0 and 1, got {}",
            args.alpha
        )));
    }
    let mut manifest = RunManifest::new(
        "collapse",
        serde_json::json!({
            "series": args.series.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "class": format!("{:?}", args.class),
            "bins_per_decade": args.bins_per_decade,
            "alpha": args.alpha,
            "out": args.out.display().to_string(),
        }),
    );
    manifest.bins_per_decade = Some(args.bins_per_decade);

    let paths = collect_series_paths(&args.series, args.class)?;
    let mut ensembles = Vec::with_capacity(paths.len());
    for loaded in par_map(&paths, |p| normalize_file(p)) {
        let (ensemble, origin, digest) = loaded?;
        manifest.input_digests.insert(origin, digest);
        ensembles.push(ensemble);
    }

    let report = collapse_report(&ensembles).map_err(|e| CliError::Data(e.to_string()))?;
    let file = CollapseFile {
        class: format!("{:?}", args.class.filter()),
        bins_per_decade: args.bins_per_decade,
        alpha: args.alpha,
        collapsed: report.all_pairs_below_critical(args.alpha),
        sigmas: ensembles.iter().map(|e| e.sigma.unwrap_or(f64::NAN)).collect(),
        report,
    };
    let body = serde_json::to_string_pretty(&file).expect("report serializes") + "\n";
    write_atomic(&args.out, body.as_bytes())?;

    let pooled = pool(&ensembles);
    let density = estimate_density(&pooled.values, args.bins_per_decade)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let ccdf = EmpiricalCcdf::new(&pooled.values).map_err(|e| CliError::Data(e.to_string()))?;
    let dir = manifest_dir(&args.out);
    write_atomic(&dir.join("pooled_density.csv"), density.to_csv().as_bytes())?;
    write_atomic(&dir.join("pooled_ccdf.csv"), ccdf.to_csv().as_bytes())?;

    manifest.outputs = vec![
        args.out.file_name().unwrap_or_default().to_string_lossy().into_owned(),
        "pooled_density.csv".into(),
        "pooled_ccdf.csv".into(),
    ];
    manifest.write(dir)
}

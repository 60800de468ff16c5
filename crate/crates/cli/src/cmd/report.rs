use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use durascale_core::fitters::{
    compare_models, tally_preferences, ComparisonVerdict, Estimator, FitResult, FittedParams,
    ModelKind, PreferenceTally,
};

use crate::artifacts::{read_input, write_atomic, RunManifest};
use crate::cmd::collapse::CollapseFile;
use crate::cmd::conditional::ProfileFile;
use crate::cmd::fit::FitFile;
use crate::error::CliError;

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Fit JSON files or directories of them, one per series
    #[arg(long, required = true, num_args = 1..)]
    pub fits: Vec<PathBuf>,
    /// Fits of the pooled ensemble, rendered as their own rows
    #[arg(long)]
    pub ensemble_fits: Option<PathBuf>,
    /// Collapse report JSON to echo into the summary
    #[arg(long)]
    pub collapse: Option<PathBuf>,
    /// Conditional output directory (its profile.json is echoed)
    #[arg(long)]
    pub conditional: Option<PathBuf>,
    /// Output directory for report.csv, preferences.csv, report.txt
    #[arg(long)]
    pub out: PathBuf,
}

const ESTIMATORS: [Estimator; 2] = [Estimator::Mle, Estimator::Nlse];
const MODELS: [ModelKind; 2] = [ModelKind::Weibull, ModelKind::QExponential];

fn estimator_label(e: Estimator) -> &'static str {
    match e {
        Estimator::Mle => "mle",
        Estimator::Nlse => "nlse",
    }
}

fn model_label(m: ModelKind) -> &'static str {
    match m {
        ModelKind::Weibull => "weibull",
        ModelKind::QExponential => "q_exponential",
    }
}

fn param_names(m: ModelKind) -> (&'static str, &'static str) {
    match m {
        ModelKind::Weibull => ("alpha", "beta"),
        ModelKind::QExponential => ("mu", "q"),
    }
}

/// (scale, shape) when the result carries full two-parameter estimates;
/// exponential boundary fallbacks carry only a rate and are excluded.
fn two_params(r: &FitResult) -> Option<(f64, f64)> {
    match r.params {
        FittedParams::Weibull { alpha, beta } => Some((alpha, beta)),
        FittedParams::QExponential { mu, q } => Some((mu, q)),
        FittedParams::Exponential { .. } => None,
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Tail exponent implied by the mean q, the derived column of the
/// power-law table.
fn tail_from_q(q_mean: f64) -> Option<f64> {
    (q_mean > 1.0).then(|| 1.0 / (q_mean - 1.0))
}

#[derive(Default)]
struct Agg {
    scale: Vec<f64>,
    shape: Vec<f64>,
    chi: Vec<f64>,
    unconverged: usize,
}

fn collect_fit_paths(roots: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut paths = Vec::new();
    for root in roots {
        if root.is_dir() {
            let entries = fs::read_dir(root)
                .map_err(|e| CliError::Data(format!("cannot read {}: {e}", root.display())))?;
            for entry in entries {
                let path = entry
                    .map_err(|e| CliError::Data(format!("cannot read {}: {e}", root.display())))?
                    .path();
                let is_json = path.extension().is_some_and(|x| x == "json");
                let is_manifest = path.file_name().is_some_and(|n| n == "manifest.json");
                if is_json && !is_manifest {
                    paths.push(path);
                }
            }
        } else {
            paths.push(root.clone());
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Data("no fit files under the given paths".into()));
    }
    Ok(paths)
}

fn load_fit_file(path: &Path, manifest: &mut RunManifest) -> Result<FitFile, CliError> {
    let text = read_input(path)?;
    manifest.digest_input(path, text.as_bytes());
    serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: not a fit artifact: {e}", path.display())))
}

/// All loaded artifacts must agree on binning and, per estimator, on the
/// residual definition; numbers from different definitions are not
/// comparable and mixing them is a lineage error.
fn check_lineage(files: &[&FitFile]) -> Result<BTreeMap<&'static str, String>, CliError> {
    let mut bins: Option<(u32, String)> = None;
    let mut defs: BTreeMap<&'static str, String> = BTreeMap::new();
    for f in files {
        match &bins {
            None => bins = Some((f.bins_per_decade, f.source.clone())),
            Some((b, first)) if *b != f.bins_per_decade => {
                return Err(CliError::Data(format!(
                    "lineage mismatch: {} was binned at {} bins/decade but {} at {}",
                    first, b, f.source, f.bins_per_decade
                )))
            }
            Some(_) => {}
        }
        for r in &f.results {
            let label = estimator_label(r.estimator);
            match defs.get(label) {
                None => {
                    defs.insert(label, r.residual_definition.clone());
                }
                Some(d) if *d != r.residual_definition => {
                    return Err(CliError::Data(format!(
                        "lineage mismatch: two {label} residual definitions in play (`{d}` vs `{}` in {})",
                        r.residual_definition, f.source
                    )))
                }
                Some(_) => {}
            }
        }
    }
    Ok(defs)
}

fn converged_result(file: &FitFile, est: Estimator, model: ModelKind) -> Option<&FitResult> {
    file.results
        .iter()
        .find(|r| r.estimator == est && r.model == model && r.converged)
}

pub fn run(args: &ReportArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new(
        "report",
        serde_json::json!({
            "fits": args.fits.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "ensemble_fits": args.ensemble_fits.as_ref().map(|p| p.display().to_string()),
            "collapse": args.collapse.as_ref().map(|p| p.display().to_string()),
            "conditional": args.conditional.as_ref().map(|p| p.display().to_string()),
            "out": args.out.display().to_string(),
        }),
    );

    let paths = collect_fit_paths(&args.fits)?;
    let mut stock_files = Vec::with_capacity(paths.len());
    for p in &paths {
        stock_files.push(load_fit_file(p, &mut manifest)?);
    }
    let ensemble_file = match &args.ensemble_fits {
        Some(p) => Some(load_fit_file(p, &mut manifest)?),
        None => None,
    };
    let mut lineage: Vec<&FitFile> = stock_files.iter().collect();
    lineage.extend(ensemble_file.iter());
    let defs = check_lineage(&lineage)?;
    manifest.residual_definitions = defs.values().cloned().collect();
    manifest.bins_per_decade = stock_files.first().map(|f| f.bins_per_decade);

    // per-stock aggregation over converged full-parameter fits
    let mut aggs: BTreeMap<(&'static str, &'static str), Agg> = BTreeMap::new();
    for file in &stock_files {
        for r in &file.results {
            let key = (estimator_label(r.estimator), model_label(r.model));
            let agg = aggs.entry(key).or_default();
            match two_params(r) {
                Some((scale, shape)) if r.converged => {
                    agg.scale.push(scale);
                    agg.shape.push(shape);
                    agg.chi.push(r.chi);
                }
                _ => agg.unconverged += 1,
            }
        }
    }

    // model preference per estimator, over stocks holding both fits
    let mut tallies: BTreeMap<&'static str, (PreferenceTally, usize)> = BTreeMap::new();
    for est in ESTIMATORS {
        let mut verdicts: Vec<ComparisonVerdict> = Vec::new();
        let mut skipped = 0usize;
        let mut present = false;
        for file in &stock_files {
            let any = file.results.iter().any(|r| r.estimator == est);
            if !any {
                continue;
            }
            present = true;
            let w = converged_result(file, est, ModelKind::Weibull);
            let q = converged_result(file, est, ModelKind::QExponential);
            match (w, q) {
                (Some(w), Some(q)) => verdicts.push(
                    compare_models(w, q)
                        .map_err(|e| CliError::Data(format!("{}: {e}", file.source)))?,
                ),
                _ => skipped += 1,
            }
        }
        if present {
            tallies.insert(estimator_label(est), (tally_preferences(&verdicts), skipped));
        }
    }

    let collapse = match &args.collapse {
        Some(p) => {
            let text = read_input(p)?;
            manifest.digest_input(p, text.as_bytes());
            Some(serde_json::from_str::<CollapseFile>(&text).map_err(|e| {
                CliError::Data(format!("{}: not a collapse artifact: {e}", p.display()))
            })?)
        }
        None => None,
    };
    let profile = match &args.conditional {
        Some(dir) => {
            let p = dir.join("profile.json");
            let text = read_input(&p)?;
            manifest.digest_input(&p, text.as_bytes());
            Some(serde_json::from_str::<ProfileFile>(&text).map_err(|e| {
                CliError::Data(format!("{}: not a conditional artifact: {e}", p.display()))
            })?)
        }
        None => None,
    };

    // report.csv: one row per scope and model, shortest round-trip numbers
    let mut csv = String::from(
        "scope,estimator,model,n_series,scale_param,scale_mean,scale_std,\
         shape_param,shape_mean,shape_std,tail_exponent,chi_mean\n",
    );
    let fmt_tail = |t: Option<f64>| t.map_or_else(|| "NA".to_string(), |v| v.to_string());
    if let Some(ens) = &ensemble_file {
        for est in ESTIMATORS {
            for model in MODELS {
                let Some(r) = converged_result(ens, est, model) else { continue };
                let Some((scale, shape)) = two_params(r) else { continue };
                let (sn, pn) = param_names(model);
                let tail = match model {
                    ModelKind::QExponential => tail_from_q(shape),
                    ModelKind::Weibull => None,
                };
                csv.push_str(&format!(
                    "ensemble,{},{},1,{sn},{scale},0,{pn},{shape},0,{},{}\n",
                    estimator_label(est),
                    model_label(model),
                    fmt_tail(tail),
                    r.chi
                ));
            }
        }
    }
    for est in ESTIMATORS {
        for model in MODELS {
            let Some(agg) = aggs.get(&(estimator_label(est), model_label(model))) else {
                continue;
            };
            if agg.scale.is_empty() {
                continue;
            }
            let (sm, ss) = mean_std(&agg.scale);
            let (pm, ps) = mean_std(&agg.shape);
            let (cm, _) = mean_std(&agg.chi);
            let (sn, pn) = param_names(model);
            let tail = match model {
                ModelKind::QExponential => tail_from_q(pm),
                ModelKind::Weibull => None,
            };
            csv.push_str(&format!(
                "stocks,{},{},{},{sn},{sm},{ss},{pn},{pm},{ps},{},{cm}\n",
                estimator_label(est),
                model_label(model),
                agg.scale.len(),
                fmt_tail(tail),
            ));
        }
    }

    let mut prefs_csv = String::from("estimator,weibull,q_exponential,ties,skipped\n");
    for (label, (tally, skipped)) in &tallies {
        prefs_csv.push_str(&format!(
            "{label},{},{},{},{skipped}\n",
            tally.weibull, tally.q_exponential, tally.ties
        ));
    }

    // report.txt: the same tables rounded for reading
    let mut txt = format!(
        "calibration report over {} series{}\n",
        stock_files.len(),
        manifest
            .bins_per_decade
            .map_or(String::new(), |b| format!(" ({b} bins/decade)")),
    );
    for est in ESTIMATORS {
        let label = estimator_label(est);
        let mut section = String::new();
        if let Some(ens) = &ensemble_file {
            for model in MODELS {
                let Some(r) = converged_result(ens, est, model) else { continue };
                let Some((scale, shape)) = two_params(r) else { continue };
                let (sn, pn) = param_names(model);
                let tail = match model {
                    ModelKind::QExponential => tail_from_q(shape)
                        .map_or(String::new(), |t| format!("   tail 1/(q-1) = {t:.4}")),
                    ModelKind::Weibull => String::new(),
                };
                section.push_str(&format!(
                    "ensemble  {:<14} {sn} {scale:.4}   {pn} {shape:.4}{tail}   chi {:.6}\n",
                    model_label(model),
                    r.chi
                ));
            }
        }
        for model in MODELS {
            let Some(agg) = aggs.get(&(label, model_label(model))) else { continue };
            if agg.scale.is_empty() {
                continue;
            }
            let (sm, ss) = mean_std(&agg.scale);
            let (pm, ps) = mean_std(&agg.shape);
            let (cm, _) = mean_std(&agg.chi);
            let (sn, pn) = param_names(model);
            let tail = match model {
                ModelKind::QExponential => tail_from_q(pm)
                    .map_or(String::new(), |t| format!("   tail 1/(q-1) = {t:.4}")),
                ModelKind::Weibull => String::new(),
            };
            section.push_str(&format!(
                "stocks    {:<14} {sn} {sm:.4} +/- {ss:.4}   {pn} {pm:.4} +/- {ps:.4}{tail}   chi {cm:.6}   n {}\n",
                model_label(model),
                agg.scale.len()
            ));
            if agg.unconverged > 0 {
                section.push_str(&format!(
                    "          {:<14} {} unconverged or boundary fits excluded\n",
                    model_label(model),
                    agg.unconverged
                ));
            }
        }
        if let Some((tally, skipped)) = tallies.get(label) {
            section.push_str(&format!(
                "preference: weibull {}, q-exponential {}, ties {}{}\n",
                tally.weibull,
                tally.q_exponential,
                tally.ties,
                if *skipped > 0 {
                    format!(", skipped {skipped}")
                } else {
                    String::new()
                }
            ));
        }
        if !section.is_empty() {
            txt.push_str(&format!("\n== {label} ==\n{section}"));
        }
    }
    if let Some(c) = &collapse {
        txt.push_str(&format!(
            "\ncollapse: max pairwise KS {:.5} over {} series, collapsed at alpha {}: {}\n",
            c.report.max_ks,
            c.report.labels.len(),
            c.alpha,
            if c.collapsed { "yes" } else { "no" }
        ));
    }
    if let Some(p) = &profile {
        txt.push_str(&format!(
            "conditional: {} pairs, grand mean {:.4}, quintile edges [{:.4}, {:.4}, {:.4}, {:.4}]\n",
            p.n_pairs,
            p.grand_mean,
            p.quintile_edges[0],
            p.quintile_edges[1],
            p.quintile_edges[2],
            p.quintile_edges[3]
        ));
    }

    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", args.out.display())))?;
    write_atomic(&args.out.join("report.csv"), csv.as_bytes())?;
    write_atomic(&args.out.join("preferences.csv"), prefs_csv.as_bytes())?;
    write_atomic(&args.out.join("report.txt"), txt.as_bytes())?;
    manifest.outputs = vec!["report.csv".into(), "preferences.csv".into(), "report.txt".into()];
    manifest.write(&args.out)
}

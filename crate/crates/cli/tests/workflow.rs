//! End-to-end pipeline runs against the installed binary: generate, fit,
//! collapse, report, and the tape path, with byte-level determinism checks.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use sha2::{Digest, Sha256};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_durascale"))
}

fn run_ok(cmd: &mut Command) {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&read(path)).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn synth_weibull(out: &Path, alpha: f64, beta: f64, n: u32, seed: u64) {
    run_ok(
        bin()
            .args(["synth", "--model", "weibull", "--params"])
            .arg(format!("alpha={alpha},beta={beta}"))
            .args(["--n", &n.to_string(), "--seed", &seed.to_string()])
            .arg("--out")
            .arg(out),
    );
}

#[test]
fn fit_writes_the_full_estimator_model_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("syn_all.csv");
    synth_weibull(&series, 1.85, 0.68, 20_000, 1900);

    let fits = dir.path().join("fits.json");
    run_ok(
        bin()
            .args(["fit", "--series"])
            .arg(&series)
            .args(["--model", "both", "--estimator", "both", "--out"])
            .arg(&fits),
    );

    let parsed = json(&fits);
    let results = parsed["results"].as_array().unwrap();
    assert_eq!(results.len(), 4, "two models x two estimators");
    for r in results {
        assert_eq!(r["converged"], true, "{r}");
    }
    let wm = results
        .iter()
        .find(|r| r["model"] == "Weibull" && r["estimator"] == "Mle")
        .unwrap();
    let alpha = wm["params"]["alpha"].as_f64().unwrap();
    let beta = wm["params"]["beta"].as_f64().unwrap();
    assert!((alpha - 1.85).abs() < 0.05, "alpha {alpha}");
    assert!((beta - 0.68).abs() < 0.01, "beta {beta}");

    // the manifest ties the fit to its input bytes and residual conventions
    let manifest = json(&dir.path().join("manifest.json"));
    let digest = format!("{:x}", Sha256::digest(fs::read(&series).unwrap()));
    let recorded = manifest["input_digests"][series.display().to_string()]
        .as_str()
        .unwrap();
    assert_eq!(recorded, digest);
    assert_eq!(manifest["residual_definitions"].as_array().unwrap().len(), 2);
    assert!(manifest.get("time").is_none() && manifest.get("timestamp").is_none());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("syn_all.csv");
    synth_weibull(&series, 1.85, 0.68, 5_000, 7);
    let first_series = fs::read(&series).unwrap();

    let fits = dir.path().join("fits.json");
    let run_fit = || {
        run_ok(
            bin()
                .args(["fit", "--series"])
                .arg(&series)
                .args(["--model", "weibull", "--estimator", "both", "--out"])
                .arg(&fits),
        );
    };
    run_fit();
    let first_fits = fs::read(&fits).unwrap();
    let first_manifest = fs::read(dir.path().join("manifest.json")).unwrap();

    // identical invocations must reproduce every artifact byte for byte
    synth_weibull(&series, 1.85, 0.68, 5_000, 7);
    assert_eq!(fs::read(&series).unwrap(), first_series);
    run_fit();
    assert_eq!(fs::read(&fits).unwrap(), first_fits);
    assert_eq!(fs::read(dir.path().join("manifest.json")).unwrap(), first_manifest);
}

#[test]
fn worker_count_does_not_change_collapse_output() {
    let dir = tempfile::tempdir().unwrap();
    let series_dir = dir.path().join("series");
    fs::create_dir(&series_dir).unwrap();
    for i in 0..4u64 {
        synth_weibull(
            &series_dir.join(format!("st{i}_all.csv")),
            1.85,
            0.68,
            5_000,
            100 + i,
        );
    }
    let mut outputs: Vec<Vec<u8>> = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("t{threads}"))
            .join("report.json");
        run_ok(
            bin()
                .env("DURASCALE_THREADS", threads)
                .args(["collapse", "--series"])
                .arg(&series_dir)
                .arg("--out")
                .arg(&out),
        );
        outputs.push(fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

/// Scaling every series to its own standard deviation stacks two decades
/// of raw scales onto one curve, and fitting each series recovers the
/// common shape; the report then prefers the generating family for every
/// single stock.
#[test]
fn scale_spanning_ensembles_collapse_and_prefer_the_generating_family() {
    let dir = tempfile::tempdir().unwrap();
    let series_dir = dir.path().join("series");
    let fits_dir = dir.path().join("fits");
    fs::create_dir_all(&series_dir).unwrap();
    fs::create_dir_all(&fits_dir).unwrap();

    let n_stocks = 23usize;
    let mut fit_paths: Vec<PathBuf> = Vec::new();
    for i in 0..n_stocks {
        // spread scale parameters over two decades at fixed shape
        let scale = 10f64.powf(2.0 * i as f64 / (n_stocks - 1) as f64);
        let alpha = 1.85 / scale.powf(0.68);
        let series = series_dir.join(format!("st{i:02}_all.csv"));
        synth_weibull(&series, alpha, 0.68, 20_000, 1900 + i as u64);

        let fits = fits_dir.join(format!("st{i:02}.json"));
        run_ok(
            bin()
                .args(["fit", "--series"])
                .arg(&series)
                .args(["--model", "both", "--estimator", "mle", "--out"])
                .arg(&fits),
        );
        fit_paths.push(fits);
    }

    let collapse_json = dir.path().join("collapse").join("report.json");
    run_ok(
        bin()
            .args(["collapse", "--series"])
            .arg(&series_dir)
            .arg("--out")
            .arg(&collapse_json),
    );
    let collapse = json(&collapse_json);
    assert_eq!(collapse["collapsed"], true);
    let max_ks = collapse["report"]["max_ks"].as_f64().unwrap();
    assert!(max_ks < 0.0163, "max_ks {max_ks}");
    let sigmas: Vec<f64> = collapse["sigmas"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(sigmas.len(), n_stocks);
    let span = sigmas.iter().cloned().fold(f64::MIN, f64::max)
        / sigmas.iter().cloned().fold(f64::MAX, f64::min);
    assert!(span > 50.0, "sigma span {span}");
    assert!(collapse_json.parent().unwrap().join("pooled_density.csv").exists());
    assert!(collapse_json.parent().unwrap().join("pooled_ccdf.csv").exists());

    let report_dir = dir.path().join("report");
    run_ok(
        bin()
            .args(["report", "--fits"])
            .arg(&fits_dir)
            .arg("--collapse")
            .arg(&collapse_json)
            .arg("--out")
            .arg(&report_dir),
    );

    // every stock was generated from the stretched-exponential family and
    // every likelihood comparison should say so
    let prefs = read(&report_dir.join("preferences.csv"));
    assert_eq!(prefs, "estimator,weibull,q_exponential,ties,skipped\nmle,23,0,0,0\n");

    let txt = read(&report_dir.join("report.txt"));
    assert!(txt.contains("preference: weibull 23, q-exponential 0, ties 0"), "{txt}");
    assert!(txt.contains("collapsed at alpha 0.01: yes"), "{txt}");

    // the per-stock shape scatter stays tight while scales span two decades
    let csv = read(&report_dir.join("report.csv"));
    let row = csv
        .lines()
        .find(|l| l.starts_with("stocks,mle,weibull,"))
        .unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[3], "23");
    let beta_mean: f64 = fields[8].parse().unwrap();
    let beta_std: f64 = fields[9].parse().unwrap();
    assert!((beta_mean - 0.68).abs() < 0.01, "beta mean {beta_mean}");
    assert!(beta_std < 0.02, "beta std {beta_std}");
}

#[test]
fn tape_round_trip_feeds_summaries_and_conditional_structure() {
    let dir = tempfile::tempdir().unwrap();
    let tape = dir.path().join("tape.csv");
    run_ok(
        bin()
            .args([
                "synth",
                "--model",
                "acd",
                "--params",
                "omega=1,a=0.2,b=0.7",
                "--n",
                "50000",
                "--seed",
                "617",
                "--as-tape",
                "--stock",
                "600519",
                "--out",
            ])
            .arg(&tape),
    );

    let ingest_dir = dir.path().join("ingest");
    run_ok(bin().args(["ingest", "--tape"]).arg(&tape).arg("--out").arg(&ingest_dir));
    let summary = read(&ingest_dir.join("summary.csv"));
    assert!(summary.starts_with("stock,class,n_trades,n_zero,mean_duration\n"), "{summary}");
    assert!(summary.contains("\n600519,all,50071,32,10.0756904\n"), "{summary}");
    assert!(summary.contains("\n600519,partial,0,0,NA\n"), "{summary}");
    for name in ["600519_all.csv", "600519_filled.csv", "600519_partial.csv"] {
        assert!(ingest_dir.join("series").join(name).exists(), "{name}");
    }

    // summarize is the ingest front half and must agree byte for byte
    let sum_dir = dir.path().join("summarize");
    run_ok(bin().args(["summarize", "--tape"]).arg(&tape).arg("--out").arg(&sum_dir));
    assert_eq!(read(&sum_dir.join("summary.csv")), summary);

    let cond_dir = dir.path().join("conditional");
    run_ok(bin().args(["conditional", "--tape"]).arg(&tape).arg("--out").arg(&cond_dir));
    let profile = json(&cond_dir.join("profile.json"));
    assert_eq!(profile["n_pairs"], 49_865);
    let groups: Vec<u64> = profile["group_sizes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(groups, vec![9973; 5]);
    for q in 1..=5 {
        assert!(cond_dir.join(format!("conditional_density_q{q}.csv")).exists());
    }
    for q in 1..=4 {
        assert!(cond_dir.join(format!("z_q{q}.csv")).exists());
    }
    assert!(cond_dir.join("mean_conditional.csv").exists());
    assert!(cond_dir.join("manifest.json").exists());
}

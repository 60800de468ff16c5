//! Empirical densities, CCDFs, normalized durations, and scaling collapse.
//!
//! Normalization divides positive durations by their sample standard
//! deviation, making series from stocks with activity scales two decades
//! apart comparable. Densities live on logarithmic bins; collapse quality
//! is measured by two-sample Kolmogorov-Smirnov distances, a distribution-
//! free stand-in for "the curves lie on top of each other".

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tape::{ClassFilter, DurationSeries};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DensityError {
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),
    #[error("empty input")]
    EmptyInput,
    #[error("value {0} is not positive")]
    NonPositive(f64),
    #[error("need at least two ensembles, got {0}")]
    TooFewEnsembles(usize),
    #[error("ensemble '{stock}' has {got} values, need at least {need}")]
    TooFewSamples { stock: String, got: usize, need: usize },
    #[error("bins_per_decade must be at least 1")]
    BadBinning,
}

/// Nominal log-bin resolution: resolves three decades of durations with
/// about 75 bins while keeping bulk bins well populated at realistic n.
pub const DEFAULT_BINS_PER_DECADE: u32 = 25;

/// Minimum ensemble size admitted to a collapse comparison.
pub const MIN_COLLAPSE_SAMPLES: usize = 100;

/// Durations divided by their own sample standard deviation.
///
/// `sigma` is `None` for pooled ensembles, whose members were already
/// normalized individually.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedSeries {
    pub stock: String,
    pub class_filter: ClassFilter,
    pub values: Vec<f64>,
    pub sigma: Option<f64>,
}

/// Sample (n-1 denominator) standard deviation; NaN for fewer than two
/// values, the caller's degenerate-input guard.
pub fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// g = tau / sigma over the positive durations of a series, with sigma the
/// sample (n-1) standard deviation of those same positive durations. Zero
/// durations are excluded before anything is computed.
pub fn normalize(series: &DurationSeries) -> Result<NormalizedSeries, DensityError> {
    let positive: Vec<f64> = series
        .durations_secs()
        .into_iter()
        .filter(|&t| t > 0.0)
        .collect();
    if positive.len() < 2 {
        return Err(DensityError::DegenerateSeries(format!(
            "'{}' has {} positive durations, need at least 2",
            series.stock,
            positive.len()
        )));
    }
    let sigma = sample_std(&positive);
    if sigma == 0.0 {
        return Err(DensityError::DegenerateSeries(format!(
            "'{}' has zero duration variance",
            series.stock
        )));
    }
    Ok(NormalizedSeries {
        stock: series.stock.clone(),
        class_filter: series.class_filter,
        values: positive.iter().map(|&t| t / sigma).collect(),
        sigma: Some(sigma),
    })
}

/// Histogram density on logarithmic bins.
///
/// Edges span [min, max] exactly with the requested nominal resolution
/// (the bin count is rounded up to cover the range, so realized bins are
/// never coarser than asked). density = counts / (total_n * bin width),
/// so occupied mass sums to 1 whenever the edges cover the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDensity {
    pub bin_edges: Vec<f64>,
    pub centers: Vec<f64>,
    pub density: Vec<f64>,
    pub counts: Vec<u64>,
    pub total_n: u64,
    pub bins_per_decade: u32,
}

impl EmpiricalDensity {
    /// Total probability mass over the bins.
    pub fn mass(&self) -> f64 {
        self.density
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(d, e)| d * (e[1] - e[0]))
            .sum()
    }

    /// (center, density, count) for bins holding at least `min_count`.
    pub fn occupied(&self, min_count: u64) -> Vec<(f64, f64, u64)> {
        (0..self.centers.len())
            .filter(|&i| self.counts[i] >= min_count.max(1))
            .map(|i| (self.centers[i], self.density[i], self.counts[i]))
            .collect()
    }

    /// Probability mass in bins at or above the one containing `x`.
    pub fn mass_above_edge(&self, edge_index: usize) -> f64 {
        (edge_index..self.centers.len())
            .map(|i| self.counts[i] as f64 / self.total_n as f64)
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_center,density,count\n");
        for i in 0..self.centers.len() {
            out.push_str(&format!(
                "{},{},{}\n",
                self.centers[i], self.density[i], self.counts[i]
            ));
        }
        out
    }
}

/// Logarithmically spaced edges covering [lo, hi] with at least the
/// requested nominal resolution; endpoints are exact.
pub fn log_grid(lo: f64, hi: f64, bins_per_decade: u32) -> Vec<f64> {
    if lo == hi {
        let half = 10.0_f64.powf(0.5 / bins_per_decade as f64);
        return vec![lo / half, lo * half];
    }
    let decades = (hi / lo).log10();
    let n_bins = ((decades * bins_per_decade as f64).ceil() as usize).max(1);
    let ratio = (hi / lo).ln() / n_bins as f64;
    let mut e: Vec<f64> = (0..=n_bins)
        .map(|k| lo * (ratio * k as f64).exp())
        .collect();
    e[0] = lo;
    e[n_bins] = hi;
    e
}

/// Bins positive values logarithmically and converts counts to a density.
/// A single distinct value gets one nominal-width bin around it.
pub fn estimate_density(
    values: &[f64],
    bins_per_decade: u32,
) -> Result<EmpiricalDensity, DensityError> {
    if values.is_empty() {
        return Err(DensityError::EmptyInput);
    }
    if bins_per_decade == 0 {
        return Err(DensityError::BadBinning);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        if !(v.is_finite() && v > 0.0) {
            return Err(DensityError::NonPositive(v));
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    estimate_density_on_grid(values, &log_grid(lo, hi, bins_per_decade), bins_per_decade)
}

/// Bins values onto a caller-supplied edge grid, for densities that must
/// share bins (conditional analysis). `total_n` counts every submitted
/// value, so mass reflects grid coverage; values outside the grid are
/// dropped from the counts.
pub fn estimate_density_on_grid(
    values: &[f64],
    edges: &[f64],
    bins_per_decade: u32,
) -> Result<EmpiricalDensity, DensityError> {
    if values.is_empty() {
        return Err(DensityError::EmptyInput);
    }
    if edges.len() < 2 {
        return Err(DensityError::BadBinning);
    }
    let n_bins = edges.len() - 1;
    let mut counts = vec![0u64; n_bins];
    for &v in values {
        if !(v.is_finite() && v > 0.0) {
            return Err(DensityError::NonPositive(v));
        }
        if v < edges[0] || v > edges[n_bins] {
            continue;
        }
        let idx = edges.partition_point(|&e| e <= v);
        counts[idx.saturating_sub(1).min(n_bins - 1)] += 1;
    }
    let total_n = values.len() as u64;
    let density: Vec<f64> = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, e)| c as f64 / (total_n as f64 * (e[1] - e[0])))
        .collect();
    let centers = edges.windows(2).map(|e| (e[0] * e[1]).sqrt()).collect();
    Ok(EmpiricalDensity {
        bin_edges: edges.to_vec(),
        centers,
        density,
        counts,
        total_n,
        bins_per_decade,
    })
}

/// Right-continuous empirical survival function C(x) = #{values > x} / n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCcdf {
    sorted: Vec<f64>,
}

impl EmpiricalCcdf {
    pub fn new(values: &[f64]) -> Result<Self, DensityError> {
        if values.is_empty() {
            return Err(DensityError::EmptyInput);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN durations"));
        Ok(Self { sorted })
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let le = self.sorted.partition_point(|&v| v <= x);
        (self.sorted.len() - le) as f64 / self.sorted.len() as f64
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    /// (x, C(x)) at each distinct sorted value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,ccdf\n");
        let mut i = 0;
        while i < self.sorted.len() {
            let x = self.sorted[i];
            while i < self.sorted.len() && self.sorted[i] == x {
                i += 1;
            }
            out.push_str(&format!(
                "{},{}\n",
                x,
                (self.sorted.len() - i) as f64 / self.sorted.len() as f64
            ));
        }
        out
    }
}

/// Two-sample Kolmogorov-Smirnov distance sup |C_a - C_b|. Ties advance
/// both sides before the gap is measured.
pub fn two_sample_ks(a: &EmpiricalCcdf, b: &EmpiricalCcdf) -> f64 {
    let (xs, ys) = (&a.sorted, &b.sorted);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] == x {
            i += 1;
        }
        while j < ys.len() && ys[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Large-sample two-sample KS critical value c(alpha) sqrt((n+m)/(nm)) with
/// c(alpha) = sqrt(-ln(alpha/2) / 2).
pub fn ks_two_sample_critical(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Pairwise collapse diagnostics for a set of normalized ensembles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseReport {
    pub labels: Vec<String>,
    pub n_values: Vec<usize>,
    pub pairwise_ks: Vec<Vec<f64>>,
    pub max_ks: f64,
    pub pooled_deviation: Vec<f64>,
}

impl CollapseReport {
    /// True when every pairwise distance sits below its own critical value
    /// at level `alpha`.
    pub fn all_pairs_below_critical(&self, alpha: f64) -> bool {
        let k = self.labels.len();
        (0..k).all(|i| {
            (i + 1..k).all(|j| {
                self.pairwise_ks[i][j]
                    < ks_two_sample_critical(alpha, self.n_values[i], self.n_values[j])
            })
        })
    }
}

/// Pairwise KS matrix, its maximum, and each ensemble's sup-distance to the
/// pooled ensemble. Requires at least two ensembles of at least
/// `MIN_COLLAPSE_SAMPLES` values each.
pub fn collapse_report(ensembles: &[NormalizedSeries]) -> Result<CollapseReport, DensityError> {
    if ensembles.len() < 2 {
        return Err(DensityError::TooFewEnsembles(ensembles.len()));
    }
    for e in ensembles {
        if e.values.len() < MIN_COLLAPSE_SAMPLES {
            return Err(DensityError::TooFewSamples {
                stock: e.stock.clone(),
                got: e.values.len(),
                need: MIN_COLLAPSE_SAMPLES,
            });
        }
    }
    let ccdfs: Vec<EmpiricalCcdf> = ensembles
        .iter()
        .map(|e| EmpiricalCcdf::new(&e.values).expect("nonempty by precondition"))
        .collect();
    let k = ensembles.len();
    let mut pairwise = vec![vec![0.0; k]; k];
    let mut max_ks: f64 = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            let d = two_sample_ks(&ccdfs[i], &ccdfs[j]);
            pairwise[i][j] = d;
            pairwise[j][i] = d;
            max_ks = max_ks.max(d);
        }
    }
    let pooled = pool(ensembles);
    let pooled_ccdf = EmpiricalCcdf::new(&pooled.values).expect("nonempty");
    let pooled_deviation = ccdfs
        .iter()
        .map(|c| two_sample_ks(c, &pooled_ccdf))
        .collect();
    Ok(CollapseReport {
        labels: ensembles.iter().map(|e| e.stock.clone()).collect(),
        n_values: ensembles.iter().map(|e| e.values.len()).collect(),
        pairwise_ks: pairwise,
        max_ks,
        pooled_deviation,
    })
}

/// Concatenates ensembles into one. The result has no single sigma; the
/// class tag survives only if every member agrees.
pub fn pool(ensembles: &[NormalizedSeries]) -> NormalizedSeries {
    let class = ensembles
        .first()
        .map(|e| e.class_filter)
        .filter(|&c| ensembles.iter().all(|e| e.class_filter == c))
        .unwrap_or(ClassFilter::All);
    NormalizedSeries {
        stock: "pooled".to_string(),
        class_filter: class,
        values: ensembles.iter().flat_map(|e| e.values.iter().copied()).collect(),
        sigma: None,
    }
}

//! Conditional structure of successive normalized durations.
//!
//! Pairs (g0, g) are successive positive durations inside one session block
//! of one stock, normalized per stock, then pooled. The preceding values g0
//! are split into five rank quintiles; the following values are compared
//! across quintiles through conditional densities on a shared grid, the
//! log-ratio curves z_i = ln[p(g|Q5)/p(g|Q_i)], and the binned mean
//! conditional duration. Under independence every diagnostic is flat; under
//! serial dependence long durations follow long durations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::densities::{
    estimate_density_on_grid, log_grid, normalize, DensityError, EmpiricalDensity,
};
use crate::tape::DurationSeries;

/// Fewest pooled pairs admitted to a full conditional profile.
pub const MIN_PROFILE_PAIRS: usize = 1000;
/// Fewest values a quintile partition can split.
pub const MIN_PARTITION_VALUES: usize = 5;
/// g0 bins with fewer pairs than this are flagged, not trusted.
pub const LOW_CONFIDENCE_PAIRS: u64 = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConditionalError {
    #[error("pooled pair set has {got} pairs, need at least {need}")]
    TooFewPairs { got: usize, need: usize },
    #[error("partition needs at least {need} values, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("quintile group {0} is empty")]
    EmptyGroup(usize),
    #[error("partition covers {partitioned} values but the pair set has {pairs}")]
    MismatchedPartition { pairs: usize, partitioned: usize },
    #[error("need at least {need} g0 bins, got {got}")]
    TooFewBins { got: usize, need: usize },
    #[error(transparent)]
    Density(#[from] DensityError),
}

/// Successive-duration pairs (g0 precedes g1), pooled across stocks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PairSet {
    pub g0: Vec<f64>,
    pub g1: Vec<f64>,
}

impl PairSet {
    /// Consecutive pairs (v_i, v_{i+1}) of one uninterrupted positive
    /// sequence; the caller guarantees adjacency is physically meaningful.
    pub fn from_sequence(values: &[f64]) -> Self {
        let mut pairs = Self::default();
        for w in values.windows(2) {
            pairs.g0.push(w[0]);
            pairs.g1.push(w[1]);
        }
        pairs
    }

    pub fn push(&mut self, g0: f64, g1: f64) {
        self.g0.push(g0);
        self.g1.push(g1);
    }

    pub fn len(&self) -> usize {
        self.g0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g0.is_empty()
    }
}

/// Builds the pooled pair ensemble: per stock, successive positive
/// durations within one session block, divided by that stock's own
/// normalization sigma, then concatenated.
pub fn normalized_pairs(series: &[DurationSeries]) -> Result<PairSet, ConditionalError> {
    let mut pairs = PairSet::default();
    for s in series {
        let sigma = normalize(s)?.sigma.expect("per-series sigma is always present");
        for (a, b) in s.successive_positive_pairs() {
            pairs.push(a / sigma, b / sigma);
        }
    }
    Ok(pairs)
}

/// Rank-quintile split of a value sequence. Groups hold indices into the
/// input; sizes differ by at most one, with remainders going to the
/// lowest groups. Ties are resolved by rank, so equal values may straddle
/// a boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuintilePartition {
    pub edges: [f64; 4],
    pub groups: [Vec<usize>; 5],
}

impl QuintilePartition {
    pub fn group_sizes(&self) -> [usize; 5] {
        [
            self.groups[0].len(),
            self.groups[1].len(),
            self.groups[2].len(),
            self.groups[3].len(),
            self.groups[4].len(),
        ]
    }
}

pub fn partition_quintiles(values: &[f64]) -> Result<QuintilePartition, ConditionalError> {
    let n = values.len();
    if n < MIN_PARTITION_VALUES {
        return Err(ConditionalError::TooFewSamples {
            got: n,
            need: MIN_PARTITION_VALUES,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .expect("no NaN durations")
            .then(a.cmp(&b))
    });
    let base = n / 5;
    let rem = n % 5;
    let mut groups: [Vec<usize>; 5] = Default::default();
    let mut edges = [0.0; 4];
    let mut at = 0;
    for (i, group) in groups.iter_mut().enumerate() {
        let size = base + usize::from(i < rem);
        group.extend_from_slice(&order[at..at + size]);
        at += size;
        if i < 4 {
            edges[i] = values[order[at]];
        }
    }
    Ok(QuintilePartition { edges, groups })
}

/// Density of the following duration g within each quintile of the
/// preceding duration, on one grid spanning the pooled following values.
pub fn conditional_densities(
    pairs: &PairSet,
    partition: &QuintilePartition,
    bins_per_decade: u32,
) -> Result<[EmpiricalDensity; 5], ConditionalError> {
    let covered: usize = partition.groups.iter().map(Vec::len).sum();
    if covered != pairs.len() {
        return Err(ConditionalError::MismatchedPartition {
            pairs: pairs.len(),
            partitioned: covered,
        });
    }
    let lo = pairs.g1.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = pairs.g1.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let grid = log_grid(lo, hi, bins_per_decade);
    let mut out = Vec::with_capacity(5);
    for (i, group) in partition.groups.iter().enumerate() {
        if group.is_empty() {
            return Err(ConditionalError::EmptyGroup(i));
        }
        let values: Vec<f64> = group.iter().map(|&idx| pairs.g1[idx]).collect();
        out.push(estimate_density_on_grid(&values, &grid, bins_per_decade)?);
    }
    Ok(out.try_into().expect("exactly five groups"))
}

/// One shared-grid point of a log-ratio curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZPoint {
    pub center: f64,
    pub z: f64,
    /// pairs behind the numerator (top-quintile) bin
    pub count_top: u64,
    /// pairs behind the denominator bin
    pub count_ref: u64,
}

/// z_i(g) = ln[p(g|Q5)/p(g|Q_i)] for i = 1..4 on bins occupied in both
/// densities; other bins are omitted, never imputed. The Q5-vs-Q5 curve is
/// identically zero and not emitted.
pub fn z_curves(densities: &[EmpiricalDensity; 5]) -> [Vec<ZPoint>; 4] {
    let top = &densities[4];
    let mut curves: [Vec<ZPoint>; 4] = Default::default();
    for (i, curve) in curves.iter_mut().enumerate() {
        let d = &densities[i];
        for bin in 0..top.centers.len() {
            if top.counts[bin] > 0 && d.counts[bin] > 0 {
                curve.push(ZPoint {
                    center: top.centers[bin],
                    z: (top.density[bin] / d.density[bin]).ln(),
                    count_top: top.counts[bin],
                    count_ref: d.counts[bin],
                });
            }
        }
    }
    curves
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanConditionalBin {
    pub g0_center: f64,
    pub mean_g: f64,
    pub n_pairs: u64,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanConditionalCurve {
    pub bins: Vec<MeanConditionalBin>,
    /// unconditional mean of the following duration, the independence
    /// reference line
    pub grand_mean: f64,
}

/// Mean following duration per log-spaced bin of the preceding duration.
/// `g0_bins` is the total bin count over the g0 range; empty bins are
/// omitted and thin ones flagged low-confidence.
pub fn mean_conditional(
    pairs: &PairSet,
    g0_bins: usize,
) -> Result<MeanConditionalCurve, ConditionalError> {
    if pairs.is_empty() {
        return Err(ConditionalError::TooFewPairs { got: 0, need: 1 });
    }
    if g0_bins < 5 {
        return Err(ConditionalError::TooFewBins { got: g0_bins, need: 5 });
    }
    let lo = pairs.g0.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = pairs.g0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let edges: Vec<f64> = if lo == hi {
        vec![lo * 0.99, lo * 1.01]
    } else {
        let ratio = (hi / lo).ln() / g0_bins as f64;
        let mut e: Vec<f64> = (0..=g0_bins).map(|k| lo * (ratio * k as f64).exp()).collect();
        e[0] = lo;
        e[g0_bins] = hi;
        e
    };
    let n_bins = edges.len() - 1;
    let mut sums = vec![0.0f64; n_bins];
    let mut counts = vec![0u64; n_bins];
    for (&g0, &g1) in pairs.g0.iter().zip(&pairs.g1) {
        let idx = edges.partition_point(|&e| e <= g0);
        let idx = idx.saturating_sub(1).min(n_bins - 1);
        sums[idx] += g1;
        counts[idx] += 1;
    }
    let bins = (0..n_bins)
        .filter(|&i| counts[i] > 0)
        .map(|i| MeanConditionalBin {
            g0_center: (edges[i] * edges[i + 1]).sqrt(),
            mean_g: sums[i] / counts[i] as f64,
            n_pairs: counts[i],
            low_confidence: counts[i] < LOW_CONFIDENCE_PAIRS,
        })
        .collect();
    let grand_mean = pairs.g1.iter().sum::<f64>() / pairs.len() as f64;
    Ok(MeanConditionalCurve { bins, grand_mean })
}

/// Full conditional diagnostic bundle over one pooled pair ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalProfile {
    pub quintile_edges: [f64; 4],
    pub group_sizes: [usize; 5],
    pub conditional_densities: [EmpiricalDensity; 5],
    pub z_curves: [Vec<ZPoint>; 4],
    pub mean_conditional: MeanConditionalCurve,
    pub n_pairs: usize,
}

pub fn conditional_profile(
    pairs: &PairSet,
    bins_per_decade: u32,
    g0_bins: usize,
) -> Result<ConditionalProfile, ConditionalError> {
    if pairs.len() < MIN_PROFILE_PAIRS {
        return Err(ConditionalError::TooFewPairs {
            got: pairs.len(),
            need: MIN_PROFILE_PAIRS,
        });
    }
    let partition = partition_quintiles(&pairs.g0)?;
    let densities = conditional_densities(pairs, &partition, bins_per_decade)?;
    let curves = z_curves(&densities);
    let mean = mean_conditional(pairs, g0_bins)?;
    Ok(ConditionalProfile {
        quintile_edges: partition.edges,
        group_sizes: partition.group_sizes(),
        conditional_densities: densities,
        z_curves: curves,
        mean_conditional: mean,
        n_pairs: pairs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::WeibullParams;
    use crate::synth::{sample_acd, sample_weibull, AcdParams, Innovation};
    use crate::tape::ClassFilter;

    #[test]
    fn ten_distinct_values_split_into_five_pairs() {
        let values = [7.0, 1.0, 9.0, 3.0, 5.0, 2.0, 8.0, 4.0, 10.0, 6.0];
        let p = partition_quintiles(&values).unwrap();
        assert_eq!(p.group_sizes(), [2; 5]);
        for (i, group) in p.groups.iter().enumerate() {
            let mut vals: Vec<f64> = group.iter().map(|&idx| values[idx]).collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(vals, [2.0 * i as f64 + 1.0, 2.0 * i as f64 + 2.0]);
        }
        assert_eq!(p.edges, [3.0, 5.0, 7.0, 9.0]);
    }

    #[test]
    fn remainder_goes_to_the_lowest_groups() {
        let values: Vec<f64> = (1..=11).map(|i| i as f64).collect();
        let p = partition_quintiles(&values).unwrap();
        assert_eq!(p.group_sizes(), [3, 2, 2, 2, 2]);
        let values: Vec<f64> = (1..=13).map(|i| i as f64).collect();
        let p = partition_quintiles(&values).unwrap();
        assert_eq!(p.group_sizes(), [3, 3, 3, 2, 2]);
    }

    #[test]
    fn ties_straddle_boundaries_by_rank() {
        let values = [1.0; 10];
        let p = partition_quintiles(&values).unwrap();
        assert_eq!(p.group_sizes(), [2; 5]);
        // stable rank order keeps the original index order within ties
        assert_eq!(p.groups[0], vec![0, 1]);
        assert_eq!(p.groups[4], vec![8, 9]);
    }

    #[test]
    fn quintile_edges_approach_theoretical_quantiles() {
        // uniform(0,1) via the seeded exponential stream
        let exp = sample_weibull(&WeibullParams::new(1.0, 1.0).unwrap(), 100_000, 401);
        let uniform: Vec<f64> = exp.iter().map(|&g| (-g).exp_m1().abs()).collect();
        let p = partition_quintiles(&uniform).unwrap();
        // order-statistic sd at these quantiles is ~0.0013 for n = 1e5
        for (edge, expect) in p.edges.iter().zip([0.2, 0.4, 0.6, 0.8]) {
            assert!((edge - expect).abs() < 0.006, "edge {edge} vs {expect}");
        }
    }

    #[test]
    fn partition_rejects_tiny_inputs() {
        assert!(matches!(
            partition_quintiles(&[1.0, 2.0, 3.0, 4.0]),
            Err(ConditionalError::TooFewSamples { got: 4, .. })
        ));
    }

    #[test]
    fn iid_conditional_densities_match_the_unconditional_density() {
        let sample = sample_weibull(&WeibullParams::new(1.85, 0.68).unwrap(), 400_001, 403);
        let pairs = PairSet::from_sequence(&sample);
        let partition = partition_quintiles(&pairs.g0).unwrap();
        let cond = conditional_densities(&pairs, &partition, 25).unwrap();
        let pooled = estimate_density_on_grid(&pairs.g1, &cond[0].bin_edges, 25).unwrap();
        // across a few hundred bin comparisons a handful of 3-sigma
        // excursions are expected; a 5-sigma one is not
        let mut checked = 0;
        let mut beyond_3 = 0;
        for d in &cond {
            let n_i = d.total_n as f64;
            for bin in 0..d.centers.len() {
                if d.counts[bin] < 100 {
                    continue;
                }
                let p = pooled.counts[bin] as f64 / pooled.total_n as f64;
                let sigma = (p * (1.0 - p) / n_i).sqrt();
                let p_hat = d.counts[bin] as f64 / n_i;
                let dev = (p_hat - p).abs() / sigma;
                assert!(dev < 5.0, "bin {bin}: {dev:.1} sigma from the pooled fraction");
                beyond_3 += usize::from(dev >= 3.0);
                checked += 1;
            }
        }
        assert!(checked > 100, "only {checked} bins were populated enough");
        assert!(
            beyond_3 <= checked / 100 + 2,
            "{beyond_3} of {checked} bins beyond 3 sigma"
        );
    }

    #[test]
    fn perfect_persistence_confines_the_top_quintile() {
        let g: Vec<f64> = (1..=2000).map(|i| i as f64 / 100.0).collect();
        let mut pairs = PairSet::default();
        for &v in &g {
            pairs.push(v, v);
        }
        let partition = partition_quintiles(&pairs.g0).unwrap();
        let cond = conditional_densities(&pairs, &partition, 10).unwrap();
        let top_edge = partition.edges[3];
        for (bin, &count) in cond[4].counts.iter().enumerate() {
            if count > 0 {
                assert!(
                    cond[4].bin_edges[bin + 1] >= top_edge,
                    "top-quintile mass below the fourth edge"
                );
            }
        }
    }

    #[test]
    fn acd_pairs_put_heavier_tail_mass_behind_long_predecessors() {
        let p = AcdParams::new(1.0, 0.25, 0.55, Innovation::Exponential).unwrap();
        let sample = sample_acd(&p, 200_000, 405);
        let pairs = PairSet::from_sequence(&sample);
        let partition = partition_quintiles(&pairs.g0).unwrap();
        let cond = conditional_densities(&pairs, &partition, 25).unwrap();
        let mut pooled: Vec<f64> = pairs.g1.clone();
        pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = pooled[pooled.len() / 2];
        let tail_mass = |d: &EmpiricalDensity| -> f64 {
            (0..d.centers.len())
                .filter(|&b| d.centers[b] > median)
                .map(|b| d.counts[b] as f64 / d.total_n as f64)
                .sum()
        };
        let (q1, q5) = (tail_mass(&cond[0]), tail_mass(&cond[4]));
        assert!(q5 > q1, "tail mass beyond the median: Q5 {q5} vs Q1 {q1}");
    }

    #[test]
    fn identical_densities_give_identically_zero_z() {
        let sample = sample_weibull(&WeibullParams::new(1.0, 1.0).unwrap(), 5000, 407);
        let grid = log_grid(
            sample.iter().copied().fold(f64::INFINITY, f64::min),
            sample.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            10,
        );
        let d = estimate_density_on_grid(&sample, &grid, 10).unwrap();
        let densities = [d.clone(), d.clone(), d.clone(), d.clone(), d.clone()];
        for curve in z_curves(&densities) {
            assert!(!curve.is_empty());
            assert!(curve.iter().all(|p| p.z == 0.0));
        }
    }

    #[test]
    fn z_is_omitted_where_either_side_is_unoccupied() {
        let lo = sample_weibull(&WeibullParams::new(1.0, 1.0).unwrap(), 3000, 409);
        let hi: Vec<f64> = lo.iter().map(|&g| g * 100.0).collect();
        let all: Vec<f64> = lo.iter().chain(&hi).copied().collect();
        let grid = log_grid(
            all.iter().copied().fold(f64::INFINITY, f64::min),
            all.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            10,
        );
        let d_lo = estimate_density_on_grid(&lo, &grid, 10).unwrap();
        let d_hi = estimate_density_on_grid(&hi, &grid, 10).unwrap();
        let densities = [d_lo.clone(), d_lo.clone(), d_lo.clone(), d_lo, d_hi];
        let curves = z_curves(&densities);
        let occupied_both = curves[0].len();
        assert!(occupied_both < grid.len() - 1, "disjoint supports must drop bins");
        for p in &curves[0] {
            assert!(p.count_top > 0 && p.count_ref > 0);
        }
    }

    #[test]
    fn acd_z1_rises_for_long_durations() {
        let p = AcdParams::new(1.0, 0.25, 0.55, Innovation::Exponential).unwrap();
        let sample = sample_acd(&p, 400_000, 411);
        let mean = sample.iter().sum::<f64>() / sample.len() as f64;
        let pairs = PairSet::from_sequence(&sample);
        let partition = partition_quintiles(&pairs.g0).unwrap();
        let cond = conditional_densities(&pairs, &partition, 25).unwrap();
        let z1: Vec<ZPoint> = z_curves(&cond)[0]
            .iter()
            .copied()
            .filter(|p| p.count_top >= 50 && p.count_ref >= 50)
            .collect();
        assert!(z1.len() > 20);
        // strictly positive well past the density crossing
        let far: Vec<&ZPoint> = z1.iter().filter(|p| p.center > 2.0 * mean).collect();
        assert!(far.len() >= 3, "no populated bins beyond twice the mean");
        assert!(far.iter().all(|p| p.z > 0.0), "z1 must be positive for large g");
        // and increasing on average across the shared range
        let half = z1.len() / 2;
        let mean_low: f64 = z1[..half].iter().map(|p| p.z).sum::<f64>() / half as f64;
        let mean_up: f64 =
            z1[half..].iter().map(|p| p.z).sum::<f64>() / (z1.len() - half) as f64;
        assert!(mean_up > mean_low, "z1 must grow with g");
    }

    #[test]
    fn iid_z_curves_are_flat_at_scale() {
        // at the 500-count threshold one bin contributes ~0.063 of log-ratio
        // noise, so the 0.1 cap needs bins coarse enough that few sit near
        // the threshold; 10 per decade keeps the expected max under it
        let sample = sample_weibull(&WeibullParams::new(1.85, 0.68).unwrap(), 1_000_001, 425);
        let pairs = PairSet::from_sequence(&sample);
        let partition = partition_quintiles(&pairs.g0).unwrap();
        let cond = conditional_densities(&pairs, &partition, 10).unwrap();
        let mut max_abs_z: f64 = 0.0;
        let mut used = 0;
        for curve in z_curves(&cond) {
            for p in curve.iter().filter(|p| p.count_top >= 500 && p.count_ref >= 500) {
                max_abs_z = max_abs_z.max(p.z.abs());
                used += 1;
            }
        }
        assert!(used > 100, "only {used} well-populated shared bins");
        assert!(max_abs_z < 0.1, "max |z| = {max_abs_z} on independent input");
    }

    #[test]
    fn iid_mean_conditional_is_flat_around_the_grand_mean() {
        let sample = sample_weibull(&WeibullParams::new(1.85, 0.68).unwrap(), 400_001, 413);
        let pairs = PairSet::from_sequence(&sample);
        let curve = mean_conditional(&pairs, 20).unwrap();
        let sd = {
            let n = pairs.g1.len() as f64;
            let m = curve.grand_mean;
            (pairs.g1.iter().map(|g| (g - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        let mut beyond_3 = 0;
        for bin in curve.bins.iter().filter(|b| !b.low_confidence) {
            let se = sd / (bin.n_pairs as f64).sqrt();
            let dev = (bin.mean_g - curve.grand_mean).abs() / se;
            assert!(
                dev < 5.0,
                "bin at {}: mean {} is {dev:.1} se from grand {}",
                bin.g0_center,
                bin.mean_g,
                curve.grand_mean
            );
            beyond_3 += usize::from(dev >= 3.0);
        }
        assert!(beyond_3 <= 1, "{beyond_3} bins beyond 3 se on independent input");
    }

    #[test]
    fn persistent_pairs_track_the_bin_center() {
        let g: Vec<f64> = (1..=5000).map(|i| 0.01 * i as f64).collect();
        let mut pairs = PairSet::default();
        for &v in &g {
            pairs.push(v, v);
        }
        let curve = mean_conditional(&pairs, 20).unwrap();
        // g = g0 exactly, so each bin mean lies inside its own log bin
        let ratio = curve.bins[1].g0_center / curve.bins[0].g0_center;
        for bin in curve.bins.iter().filter(|b| !b.low_confidence) {
            let (lo, hi) = (bin.g0_center / ratio, bin.g0_center * ratio);
            assert!(bin.mean_g > lo && bin.mean_g < hi, "bin mean escaped its bin");
        }
    }

    #[test]
    fn acd_mean_conditional_trends_upward() {
        let p = AcdParams::new(1.0, 0.25, 0.55, Innovation::Exponential).unwrap();
        let sample = sample_acd(&p, 200_000, 417);
        let pairs = PairSet::from_sequence(&sample);
        let curve = mean_conditional(&pairs, 20).unwrap();
        let pts: Vec<(f64, f64)> = curve
            .bins
            .iter()
            .filter(|b| !b.low_confidence)
            .map(|b| (b.g0_center, b.mean_g))
            .collect();
        let n = pts.len();
        assert!(n >= 10);
        // Spearman rank correlation, large-sample 1% one-sided threshold
        let rank = |xs: Vec<f64>| -> Vec<f64> {
            let mut idx: Vec<usize> = (0..xs.len()).collect();
            idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
            let mut r = vec![0.0; xs.len()];
            for (rank_pos, &i) in idx.iter().enumerate() {
                r[i] = rank_pos as f64;
            }
            r
        };
        let rx = rank(pts.iter().map(|p| p.0).collect());
        let ry = rank(pts.iter().map(|p| p.1).collect());
        let mx = (n as f64 - 1.0) / 2.0;
        let (mut num, mut dx, mut dy) = (0.0, 0.0, 0.0);
        for i in 0..n {
            num += (rx[i] - mx) * (ry[i] - mx);
            dx += (rx[i] - mx).powi(2);
            dy += (ry[i] - mx).powi(2);
        }
        let rho = num / (dx * dy).sqrt();
        assert!(
            rho * ((n - 1) as f64).sqrt() > 2.33,
            "Spearman rho {rho} over {n} bins is not significantly positive"
        );
    }

    #[test]
    fn mean_conditional_guards_its_inputs() {
        assert!(matches!(
            mean_conditional(&PairSet::default(), 20),
            Err(ConditionalError::TooFewPairs { .. })
        ));
        let pairs = PairSet::from_sequence(&[1.0, 2.0, 3.0]);
        assert!(matches!(
            mean_conditional(&pairs, 4),
            Err(ConditionalError::TooFewBins { got: 4, .. })
        ));
    }

    #[test]
    fn profile_requires_a_thousand_pairs() {
        let sample = sample_weibull(&WeibullParams::new(1.0, 1.0).unwrap(), 500, 419);
        let pairs = PairSet::from_sequence(&sample);
        assert!(matches!(
            conditional_profile(&pairs, 25, 20),
            Err(ConditionalError::TooFewPairs { got: 499, .. })
        ));
    }

    #[test]
    fn profile_assembles_all_diagnostics() {
        let sample = sample_weibull(&WeibullParams::new(1.85, 0.68).unwrap(), 20_001, 421);
        let pairs = PairSet::from_sequence(&sample);
        let profile = conditional_profile(&pairs, 25, 20).unwrap();
        assert_eq!(profile.group_sizes.iter().sum::<usize>(), pairs.len());
        assert_eq!(profile.n_pairs, 20_000);
        assert!(profile.quintile_edges.windows(2).all(|w| w[0] <= w[1]));
        for d in &profile.conditional_densities {
            assert_eq!(d.bin_edges, profile.conditional_densities[0].bin_edges);
        }
    }

    #[test]
    fn normalized_pairs_pool_per_stock_sigma() {
        let a = DurationSeries::from_secs("000001", ClassFilter::All, &[1.0, 2.0, 3.0, 4.0]);
        let b = DurationSeries::from_secs("000002", ClassFilter::All, &[10.0, 20.0, 30.0, 40.0]);
        let pairs = normalized_pairs(&[a.clone(), b]).unwrap();
        // identical shapes after per-stock normalization: second stock is the
        // first scaled by 10, so its normalized pairs coincide
        assert_eq!(pairs.len(), 6);
        for i in 0..3 {
            assert!((pairs.g0[i] - pairs.g0[i + 3]).abs() < 1e-12);
            assert!((pairs.g1[i] - pairs.g1[i + 3]).abs() < 1e-12);
        }
        let lone = normalized_pairs(&[a]).unwrap();
        assert_eq!(lone.len(), 3);
    }

    #[test]
    fn normalized_pairs_respect_segment_boundaries_and_zeros() {
        let mut s = DurationSeries::from_secs("000001", ClassFilter::All, &[1.0, 2.0, 0.0, 3.0, 4.0]);
        s.segments = vec![2, 3];
        let pairs = normalized_pairs(std::slice::from_ref(&s)).unwrap();
        // (1,2) within the first block; (0,3) dropped for the zero; (3,4) kept
        assert_eq!(pairs.len(), 2);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn partition_is_an_exhaustive_disjoint_cover(
                values in proptest::collection::vec(1u32..500, 5..300)
            ) {
                let vals: Vec<f64> = values.iter().map(|&v| v as f64 / 10.0).collect();
                let p = partition_quintiles(&vals).unwrap();
                let sizes = p.group_sizes();
                prop_assert_eq!(sizes.iter().sum::<usize>(), vals.len());
                let (min, max) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
                prop_assert!(max - min <= 1);
                let mut seen = vec![false; vals.len()];
                for group in &p.groups {
                    for &idx in group {
                        prop_assert!(!seen[idx], "index {} assigned twice", idx);
                        seen[idx] = true;
                    }
                }
                prop_assert!(seen.iter().all(|&s| s));
                // rank ordering between adjacent groups
                for w in p.groups.windows(2) {
                    let hi_prev = w[0].iter().map(|&i| vals[i]).fold(f64::NEG_INFINITY, f64::max);
                    let lo_next = w[1].iter().map(|&i| vals[i]).fold(f64::INFINITY, f64::min);
                    prop_assert!(hi_prev <= lo_next);
                }
            }
        }
    }
}

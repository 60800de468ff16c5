//! Parameter estimation for the duration models.
//!
//! MLE works on raw positive samples. Both likelihoods reduce to
//! one-dimensional profile problems: the stretched-exponential rate has a
//! closed form given the shape, and the q-exponential profile runs over the
//! generalized-Pareto auxiliary b = (q-1) mu, where the shape k = q-1 also
//! has a closed form given b (so mu = b/k). NLSE minimizes squared
//! log-density residuals on binned data with a simplex search plus a damped
//! Gauss-Newton polish.
//!
//! The two chi figures deliberately live in different residual spaces: MLE
//! chi is an r.m.s. of linear density residuals and NLSE chi an r.m.s. of
//! log-density residuals. Each result records its own definition, and model
//! comparisons only accept fits sharing one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::densities::{estimate_density, EmpiricalDensity, DEFAULT_BINS_PER_DECADE};
use crate::models::{QExpParams, WeibullParams};

/// Fewest raw samples admitted to an MLE fit.
pub const MIN_FIT_SAMPLES: usize = 100;
/// Fewest occupied bins admitted to an NLSE fit.
pub const MIN_NLSE_BINS: usize = 10;

pub const MLE_RESIDUAL_DEF: &str =
    "rms of [empirical - model] linear density over occupied log bins at 25 bins/decade";
pub const NLSE_RESIDUAL_DEF: &str =
    "rms of [ln model - ln empirical] density over fitted log bins";

const MAX_ITER: usize = 10_000;
const REL_STEP_TOL: f64 = 1e-9;
const OBJ_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("sample has {got} values, need at least {need}")]
    TooFewSamples { got: usize, need: usize },
    #[error("sample values must be positive and finite, found {0}")]
    BadValue(f64),
    #[error("degenerate sample: all values equal")]
    DegenerateSample,
    #[error("fit did not converge: {0}")]
    NonConvergence(String),
    #[error("likelihood peaks at the exponential boundary q -> 1; fallback rate mu = {}", .fallback.params.rate())]
    TailTooLight { fallback: Box<FitResult> },
    #[error("density has {got} occupied bins, need at least {need}")]
    InsufficientBins { got: usize, need: usize },
    #[error("cannot compare fits with different residual definitions ({0} vs {1})")]
    MixedEstimators(String, String),
    #[error("cannot compare unconverged fits")]
    UnconvergedFit,
    #[error("comparison needs one fit per model, got two {0:?} fits")]
    DuplicateModel(ModelKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Weibull,
    QExponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Estimator {
    Mle,
    Nlse,
}

/// Point estimates. `Exponential` only appears as the fallback reported by
/// a `TailTooLight` boundary fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum FittedParams {
    Weibull { alpha: f64, beta: f64 },
    QExponential { mu: f64, q: f64 },
    Exponential { mu: f64 },
}

impl FittedParams {
    /// Scale-like component, for display.
    pub fn rate(&self) -> f64 {
        match *self {
            Self::Weibull { alpha, .. } => alpha,
            Self::QExponential { mu, .. } | Self::Exponential { mu } => mu,
        }
    }

    pub fn as_weibull(&self) -> Option<WeibullParams> {
        match *self {
            Self::Weibull { alpha, beta } => WeibullParams::new(alpha, beta).ok(),
            _ => None,
        }
    }

    pub fn as_qexp(&self) -> Option<QExpParams> {
        match *self {
            Self::QExponential { mu, q } => QExpParams::new(mu, q).ok(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ModelKind,
    pub estimator: Estimator,
    pub params: FittedParams,
    /// r.m.s. residual in the space named by `residual_definition`.
    pub chi: f64,
    pub n_samples: usize,
    /// Occupied bins entering the objective (NLSE only).
    pub bins_used: Option<usize>,
    /// Zero-count bins skipped because their log density is undefined.
    pub bins_skipped: Option<usize>,
    pub converged: bool,
    pub log_likelihood: Option<f64>,
    pub residual_definition: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preference {
    Weibull,
    QExponential,
    Tie,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceTally {
    pub weibull: usize,
    pub q_exponential: usize,
    pub ties: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonVerdict {
    pub preferred: Preference,
    pub chi_w: f64,
    pub chi_q: f64,
    pub per_stock_preference: Option<PreferenceTally>,
}

fn validate_sample(values: &[f64]) -> Result<(), FitError> {
    if values.len() < MIN_FIT_SAMPLES {
        return Err(FitError::TooFewSamples {
            got: values.len(),
            need: MIN_FIT_SAMPLES,
        });
    }
    for &v in values {
        if !(v.is_finite() && v > 0.0) {
            return Err(FitError::BadValue(v));
        }
    }
    if values.iter().all(|&v| v == values[0]) {
        return Err(FitError::DegenerateSample);
    }
    Ok(())
}

/// r.m.s. of [empirical - model] density at occupied bin centers on the
/// default binning; the shared residual space for MLE comparisons.
fn mle_chi(values: &[f64], model_pdf: impl Fn(f64) -> f64) -> f64 {
    let density = estimate_density(values, DEFAULT_BINS_PER_DECADE)
        .expect("validated sample is nonempty and positive");
    let occupied = density.occupied(1);
    let ss: f64 = occupied
        .iter()
        .map(|&(c, d, _)| (d - model_pdf(c)).powi(2))
        .sum();
    (ss / occupied.len() as f64).sqrt()
}

/// Maximum-likelihood stretched-exponential fit via the profile score in
/// the shape: given beta, the rate is alpha = n / sum g^beta, and the
/// score f(beta) = n/beta + sum ln g - n sum(g^b ln g)/sum(g^b) is strictly
/// decreasing, so a safeguarded Newton iteration brackets its unique root.
pub fn fit_weibull_mle(values: &[f64]) -> Result<FitResult, FitError> {
    validate_sample(values)?;
    let n = values.len() as f64;
    let ln_g: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let sum_ln: f64 = ln_g.iter().sum();
    let mean_ln = sum_ln / n;
    let var_ln = ln_g.iter().map(|l| (l - mean_ln).powi(2)).sum::<f64>() / n;

    // moment start: sd(ln g) = pi / (beta sqrt 6) for the true law
    let mut beta = std::f64::consts::PI / (6.0 * var_ln).sqrt().max(1e-12);
    beta = beta.clamp(1e-3, 1e3);

    // score and its derivative at fixed beta; one exp per element
    let profile = |beta: f64| -> (f64, f64, f64) {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for &l in &ln_g {
            let w = (beta * l).exp();
            s0 += w;
            s1 += w * l;
            s2 += w * l * l;
        }
        let f = n / beta + sum_ln - n * s1 / s0;
        let fp = -n / (beta * beta) - n * (s2 * s0 - s1 * s1) / (s0 * s0);
        (f, fp, s0)
    };

    // bracket the root: f > 0 below it, f < 0 above it
    let (mut lo, mut hi) = (beta, beta);
    let (mut f_at, _, _) = profile(beta);
    let mut guard = 0;
    if f_at > 0.0 {
        loop {
            hi *= 2.0;
            let (f, _, _) = profile(hi);
            if f < 0.0 {
                break;
            }
            guard += 1;
            if guard > 60 {
                return Err(FitError::NonConvergence("shape bracket expansion failed".into()));
            }
        }
    } else {
        loop {
            lo /= 2.0;
            let (f, _, _) = profile(lo);
            if f > 0.0 {
                break;
            }
            guard += 1;
            if guard > 60 {
                return Err(FitError::NonConvergence("shape bracket expansion failed".into()));
            }
        }
    }
    beta = 0.5 * (lo + hi);
    let mut s0_at = 0.0;
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let (f, fp, s0) = profile(beta);
        f_at = f;
        s0_at = s0;
        if f > 0.0 {
            lo = beta;
        } else {
            hi = beta;
        }
        let newton = beta - f / fp;
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - beta).abs();
        beta = next;
        if step < REL_STEP_TOL * beta {
            converged = true;
            break;
        }
    }
    if !converged && f_at.abs() > 1e-8 * n {
        return Err(FitError::NonConvergence("shape iteration budget exhausted".into()));
    }
    let (_, _, s0) = if s0_at > 0.0 { (0.0, 0.0, s0_at) } else { profile(beta) };
    let alpha = n / s0;
    let log_likelihood = n * alpha.ln() + n * beta.ln() + (beta - 1.0) * sum_ln - n;
    let params = WeibullParams::new(alpha, beta)
        .map_err(|e| FitError::NonConvergence(format!("estimate left the domain: {e}")))?;
    let chi = mle_chi(values, |c| params.pdf(c).unwrap_or(f64::INFINITY));
    Ok(FitResult {
        model: ModelKind::Weibull,
        estimator: Estimator::Mle,
        params: FittedParams::Weibull { alpha, beta },
        chi,
        n_samples: values.len(),
        bins_used: None,
        bins_skipped: None,
        converged: true,
        log_likelihood: Some(log_likelihood),
        residual_definition: MLE_RESIDUAL_DEF.to_string(),
    })
}

/// Maximum-likelihood q-exponential fit via the generalized-Pareto profile.
///
/// Parameter map: k = q - 1 (tail shape) and b = k mu, so the density is
/// (b/k) (1 + b g)^(-(1+1/k)). Given b, the inner maximum is closed form,
/// k(b) = mean ln(1 + b g), leaving a one-dimensional root-find on the
/// outer score. Samples whose likelihood peaks at the k -> 0 boundary (tail
/// no heavier than exponential) are reported as `TailTooLight` with the
/// exponential fit attached.
pub fn fit_qexp_mle(values: &[f64]) -> Result<FitResult, FitError> {
    validate_sample(values)?;
    let n = values.len() as f64;
    let m1 = values.iter().sum::<f64>() / n;

    // k(b) = mean ln1p(b g); k'(b) = mean g/(1+bg); outer score
    // d(b) = 1/b - k'/k - k'
    let score = |b: f64| -> (f64, f64) {
        let (mut k, mut kp) = (0.0, 0.0);
        for &g in values {
            k += (b * g).ln_1p();
            kp += g / (1.0 + b * g);
        }
        k /= n;
        kp /= n;
        (1.0 / b - kp / k - kp, k)
    };

    let boundary = || -> FitError {
        let mu = 1.0 / m1;
        let log_likelihood = n * (mu.ln() - 1.0);
        let chi = mle_chi(values, |c| mu * (-mu * c).exp());
        FitError::TailTooLight {
            fallback: Box::new(FitResult {
                model: ModelKind::QExponential,
                estimator: Estimator::Mle,
                params: FittedParams::Exponential { mu },
                chi,
                n_samples: values.len(),
                bins_used: None,
                bins_skipped: None,
                converged: false,
                log_likelihood: Some(log_likelihood),
                residual_definition: MLE_RESIDUAL_DEF.to_string(),
            }),
        }
    };

    // geometric scan for the sign change of the outer score; the score is
    // positive near 0 only when the tail is heavier than exponential and is
    // always negative for b large enough
    let mut b_lo = 1e-6 / m1;
    let (mut d_lo, _) = score(b_lo);
    if d_lo <= 0.0 {
        return Err(boundary());
    }
    let mut b_hi = b_lo;
    let mut d_hi = d_lo;
    let mut found = false;
    for _ in 0..40 {
        let b_next = b_hi * 4.0;
        let (d_next, _) = score(b_next);
        if d_next <= 0.0 {
            b_lo = b_hi;
            d_lo = d_hi;
            b_hi = b_next;
            d_hi = d_next;
            found = true;
            break;
        }
        b_hi = b_next;
        d_hi = d_next;
    }
    if !found {
        return Err(FitError::NonConvergence("outer score never changed sign".into()));
    }

    // Illinois false position on [b_lo, b_hi]
    let mut b = b_hi;
    let mut k_at = 0.0;
    let mut converged = false;
    let mut side = 0i8;
    for _ in 0..MAX_ITER {
        b = (b_lo * d_hi - b_hi * d_lo) / (d_hi - d_lo);
        if !(b > b_lo && b < b_hi) {
            b = 0.5 * (b_lo + b_hi);
        }
        let (d, k) = score(b);
        k_at = k;
        if d > 0.0 {
            b_lo = b;
            d_lo = d;
            if side == 1 {
                d_hi *= 0.5;
            }
            side = 1;
        } else {
            b_hi = b;
            d_hi = d;
            if side == -1 {
                d_lo *= 0.5;
            }
            side = -1;
        }
        if b_hi - b_lo < REL_STEP_TOL * b_hi {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(FitError::NonConvergence("profile root-find budget exhausted".into()));
    }
    if k_at < 1e-6 {
        return Err(boundary());
    }
    let k = k_at;
    let mu = b / k;
    let q = 1.0 + k;
    let log_likelihood = n * (b.ln() - k.ln() - k - 1.0);
    let params = QExpParams::new(mu, q)
        .map_err(|e| FitError::NonConvergence(format!("estimate left the domain: {e}")))?;
    let chi = mle_chi(values, |c| params.pdf(c).unwrap_or(f64::INFINITY));
    Ok(FitResult {
        model: ModelKind::QExponential,
        estimator: Estimator::Mle,
        params: FittedParams::QExponential { mu, q },
        chi,
        n_samples: values.len(),
        bins_used: None,
        bins_skipped: None,
        converged: true,
        log_likelihood: Some(log_likelihood),
        residual_definition: MLE_RESIDUAL_DEF.to_string(),
    })
}

// ---------------------------------------------------------------------------
// NLSE on binned log densities

struct NlsePoints {
    centers: Vec<f64>,
    ln_rho: Vec<f64>,
    skipped: usize,
    total_n: usize,
}

fn nlse_points(density: &EmpiricalDensity) -> Result<NlsePoints, FitError> {
    let occupied = density.occupied(1);
    if occupied.len() < MIN_NLSE_BINS {
        return Err(FitError::InsufficientBins {
            got: occupied.len(),
            need: MIN_NLSE_BINS,
        });
    }
    Ok(NlsePoints {
        centers: occupied.iter().map(|&(c, _, _)| c).collect(),
        ln_rho: occupied.iter().map(|&(_, d, _)| d.ln()).collect(),
        skipped: density.centers.len() - occupied.len(),
        total_n: density.total_n as usize,
    })
}

/// ln rho and its gradient in the optimizer's log-parameter coordinates.
trait LogModel {
    fn ln_rho(&self, theta: [f64; 2], g: f64) -> f64;
    fn grad(&self, theta: [f64; 2], g: f64) -> [f64; 2];
    fn params(&self, theta: [f64; 2]) -> FittedParams;
    fn kind(&self) -> ModelKind;
}

/// theta = (ln alpha, ln beta)
struct WeibullLog;

impl LogModel for WeibullLog {
    fn ln_rho(&self, t: [f64; 2], g: f64) -> f64 {
        let (alpha, beta) = (t[0].exp(), t[1].exp());
        t[0] + t[1] + (beta - 1.0) * g.ln() - alpha * (beta * g.ln()).exp()
    }

    fn grad(&self, t: [f64; 2], g: f64) -> [f64; 2] {
        let (alpha, beta) = (t[0].exp(), t[1].exp());
        let a_gb = alpha * (beta * g.ln()).exp();
        [1.0 - a_gb, 1.0 + beta * g.ln() * (1.0 - a_gb)]
    }

    fn params(&self, t: [f64; 2]) -> FittedParams {
        FittedParams::Weibull {
            alpha: t[0].exp(),
            beta: t[1].exp(),
        }
    }

    fn kind(&self) -> ModelKind {
        ModelKind::Weibull
    }
}

/// theta = (ln mu, ln(q - 1))
struct QExpLog;

impl LogModel for QExpLog {
    fn ln_rho(&self, t: [f64; 2], g: f64) -> f64 {
        let (mu, k) = (t[0].exp(), t[1].exp());
        t[0] - (1.0 + 1.0 / k) * (k * mu * g).ln_1p()
    }

    fn grad(&self, t: [f64; 2], g: f64) -> [f64; 2] {
        let (mu, k) = (t[0].exp(), t[1].exp());
        let w = k * mu * g / (1.0 + k * mu * g);
        [
            1.0 - (1.0 + 1.0 / k) * w,
            (k * mu * g).ln_1p() / k - (k + 1.0) * mu * g / (1.0 + k * mu * g),
        ]
    }

    fn params(&self, t: [f64; 2]) -> FittedParams {
        FittedParams::QExponential {
            mu: t[0].exp(),
            q: 1.0 + t[1].exp(),
        }
    }

    fn kind(&self) -> ModelKind {
        ModelKind::QExponential
    }
}

fn objective(model: &dyn LogModel, pts: &NlsePoints, theta: [f64; 2]) -> f64 {
    let mut ss = 0.0;
    for (&c, &y) in pts.centers.iter().zip(&pts.ln_rho) {
        let r = model.ln_rho(theta, c) - y;
        if !r.is_finite() {
            return f64::INFINITY;
        }
        ss += r * r;
    }
    ss
}

fn nelder_mead(
    model: &dyn LogModel,
    pts: &NlsePoints,
    start: [f64; 2],
) -> ([f64; 2], f64, bool) {
    let f = |t: [f64; 2]| objective(model, pts, t);
    let mut simplex = [
        (start, f(start)),
        ([start[0] + 0.1, start[1]], f([start[0] + 0.1, start[1]])),
        ([start[0], start[1] + 0.1], f([start[0], start[1] + 0.1])),
    ];
    let mut converged = false;
    for _ in 0..MAX_ITER {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite or +inf"));
        let best = simplex[0];
        let worst = simplex[2];
        let spread = (worst.1 - best.1).abs();
        let diameter = (0..2)
            .map(|d| (simplex[2].0[d] - simplex[0].0[d]).abs())
            .fold(0.0, f64::max);
        if spread < OBJ_TOL || diameter < REL_STEP_TOL * (1.0 + best.0[0].abs() + best.0[1].abs()) {
            converged = true;
            break;
        }
        let centroid = [
            0.5 * (simplex[0].0[0] + simplex[1].0[0]),
            0.5 * (simplex[0].0[1] + simplex[1].0[1]),
        ];
        let reflect = [
            centroid[0] + (centroid[0] - worst.0[0]),
            centroid[1] + (centroid[1] - worst.0[1]),
        ];
        let fr = f(reflect);
        if fr < best.1 {
            let expand = [
                centroid[0] + 2.0 * (centroid[0] - worst.0[0]),
                centroid[1] + 2.0 * (centroid[1] - worst.0[1]),
            ];
            let fe = f(expand);
            simplex[2] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[1].1 {
            simplex[2] = (reflect, fr);
        } else {
            let contract = [
                centroid[0] + 0.5 * (worst.0[0] - centroid[0]),
                centroid[1] + 0.5 * (worst.0[1] - centroid[1]),
            ];
            let fc = f(contract);
            if fc < worst.1 {
                simplex[2] = (contract, fc);
            } else {
                for i in 1..3 {
                    let shrunk = [
                        0.5 * (simplex[i].0[0] + simplex[0].0[0]),
                        0.5 * (simplex[i].0[1] + simplex[0].0[1]),
                    ];
                    simplex[i] = (shrunk, f(shrunk));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite or +inf"));
    (simplex[0].0, simplex[0].1, converged)
}

/// Levenberg-style damped Gauss-Newton refinement in log-parameter space.
fn polish(
    model: &dyn LogModel,
    pts: &NlsePoints,
    start: [f64; 2],
) -> ([f64; 2], f64, bool) {
    let mut theta = start;
    let mut obj = objective(model, pts, theta);
    let mut lambda = 1e-8;
    let mut converged = false;
    for _ in 0..200 {
        let (mut jtj, mut jtr) = ([[0.0f64; 2]; 2], [0.0f64; 2]);
        for (&c, &y) in pts.centers.iter().zip(&pts.ln_rho) {
            let r = model.ln_rho(theta, c) - y;
            let j = model.grad(theta, c);
            for a in 0..2 {
                for b in 0..2 {
                    jtj[a][b] += j[a] * j[b];
                }
                jtr[a] += j[a] * r;
            }
        }
        let (a, b, c, d) = (
            jtj[0][0] * (1.0 + lambda),
            jtj[0][1],
            jtj[1][0],
            jtj[1][1] * (1.0 + lambda),
        );
        let det = a * d - b * c;
        if det.abs() < 1e-300 {
            break;
        }
        let step = [
            -(d * jtr[0] - b * jtr[1]) / det,
            -(a * jtr[1] - c * jtr[0]) / det,
        ];
        let trial = [theta[0] + step[0], theta[1] + step[1]];
        let trial_obj = objective(model, pts, trial);
        if trial_obj < obj {
            let improvement = obj - trial_obj;
            let step_size = step[0].abs().max(step[1].abs());
            theta = trial;
            obj = trial_obj;
            lambda = (lambda * 0.3).max(1e-12);
            if step_size < REL_STEP_TOL * (1.0 + theta[0].abs() + theta[1].abs())
                || improvement < OBJ_TOL
            {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e8 {
                converged = true; // stuck at a minimum sharper than f64 resolution
                break;
            }
        }
    }
    (theta, obj, converged)
}

fn run_nlse(
    model: &dyn LogModel,
    density: &EmpiricalDensity,
    init: [f64; 2],
) -> Result<FitResult, FitError> {
    let pts = nlse_points(density)?;
    let starts = [
        init,
        [init[0] + 0.25, init[1] + 0.25],
        [init[0] - 0.25, init[1] - 0.25],
    ];
    let mut best: Option<([f64; 2], f64, bool)> = None;
    for s in starts {
        let (t_nm, _, nm_ok) = nelder_mead(model, &pts, s);
        let (t, obj, pol_ok) = polish(model, &pts, t_nm);
        let cand = (t, obj, nm_ok || pol_ok);
        if best.as_ref().map_or(true, |b| cand.1 < b.1) {
            best = Some(cand);
        }
    }
    let (theta, obj, converged) = best.expect("at least one start");
    if !obj.is_finite() {
        return Err(FitError::NonConvergence("objective not finite at optimum".into()));
    }
    let chi = (obj / pts.centers.len() as f64).sqrt();
    Ok(FitResult {
        model: model.kind(),
        estimator: Estimator::Nlse,
        params: model.params(theta),
        chi,
        n_samples: pts.total_n,
        bins_used: Some(pts.centers.len()),
        bins_skipped: Some(pts.skipped),
        converged,
        log_likelihood: None,
        residual_definition: NLSE_RESIDUAL_DEF.to_string(),
    })
}

/// Least-squares stretched-exponential fit of a binned log density.
pub fn fit_nlse_weibull(
    density: &EmpiricalDensity,
    init: &WeibullParams,
) -> Result<FitResult, FitError> {
    run_nlse(&WeibullLog, density, [init.alpha.ln(), init.beta.ln()])
}

/// Least-squares q-exponential fit of a binned log density.
pub fn fit_nlse_qexp(density: &EmpiricalDensity, init: &QExpParams) -> Result<FitResult, FitError> {
    run_nlse(&QExpLog, density, [init.mu.ln(), (init.q - 1.0).ln()])
}

/// Declares the model with strictly smaller chi preferred. Arguments may
/// come in either order but must contain one fit per model, share a
/// residual definition, and both be converged.
pub fn compare_models(a: &FitResult, b: &FitResult) -> Result<ComparisonVerdict, FitError> {
    if a.residual_definition != b.residual_definition {
        return Err(FitError::MixedEstimators(
            a.residual_definition.clone(),
            b.residual_definition.clone(),
        ));
    }
    if !(a.converged && b.converged) {
        return Err(FitError::UnconvergedFit);
    }
    if a.model == b.model {
        return Err(FitError::DuplicateModel(a.model));
    }
    let (w, q) = if a.model == ModelKind::Weibull { (a, b) } else { (b, a) };
    let preferred = if w.chi < q.chi {
        Preference::Weibull
    } else if q.chi < w.chi {
        Preference::QExponential
    } else {
        Preference::Tie
    };
    Ok(ComparisonVerdict {
        preferred,
        chi_w: w.chi,
        chi_q: q.chi,
        per_stock_preference: None,
    })
}

/// Aggregates per-stock verdicts into a preference tally.
pub fn tally_preferences(verdicts: &[ComparisonVerdict]) -> PreferenceTally {
    let mut t = PreferenceTally::default();
    for v in verdicts {
        match v.preferred {
            Preference::Weibull => t.weibull += 1,
            Preference::QExponential => t.q_exponential += 1,
            Preference::Tie => t.ties += 1,
        }
    }
    t
}

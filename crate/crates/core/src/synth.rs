//! Seeded synthetic duration generators.
//!
//! Every sampler is a pure function of (parameters, n, seed): uniform
//! variates come from a ChaCha8 stream seeded explicitly, positive samples
//! come from closed-form inverse CCDFs, and serial dependence comes from a
//! conditional-mean recursion. These generators are the verification oracle
//! for the rest of the pipeline, so determinism is part of their contract.

use rand::distr::Open01;
use rand::Rng as _;
use rand::SeedableRng as _;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::models::{ModelError, QExpParams, WeibullParams};
use crate::special::gamma;
use crate::tape::{ClassFilter, DurationSeries, SessionCalendar, TimeOfDay, TAPE_HEADER};

/// Algorithm identifier recorded in run metadata next to the seed.
pub const RNG_ALGORITHM: &str = "chacha8";

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Inverse CCDF of the stretched-exponential density: solves
/// exp(-alpha g^beta) = u.
pub fn weibull_inv_ccdf(params: &WeibullParams, u: f64) -> f64 {
    (-u.ln() / params.alpha).powf(1.0 / params.beta)
}

/// Inverse CCDF of the q-exponential: solves [1+(q-1) mu g]^(1/(1-q)) = u.
pub fn qexp_inv_ccdf(params: &QExpParams, u: f64) -> f64 {
    let k = params.q - 1.0;
    ((-k * u.ln()).exp_m1()) / (k * params.mu)
}

/// n i.i.d. draws with CCDF exp(-alpha g^beta). Strictly positive: the
/// uniform stream excludes both endpoints.
pub fn sample_weibull(params: &WeibullParams, n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| weibull_inv_ccdf(params, r.sample(Open01)))
        .collect()
}

/// n i.i.d. draws with CCDF [1+(q-1) mu g]^(1/(1-q)).
pub fn sample_qexp(params: &QExpParams, n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| qexp_inv_ccdf(params, r.sample(Open01)))
        .collect()
}

/// Unit-mean innovation law for the conditional-mean recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Innovation {
    Exponential,
    /// Weibull shape rescaled to unit mean.
    Weibull { beta: f64 },
}

impl Innovation {
    fn draw(self, r: &mut ChaCha8Rng) -> f64 {
        let u: f64 = r.sample(Open01);
        match self {
            Self::Exponential => -u.ln(),
            Self::Weibull { beta } => (-u.ln()).powf(1.0 / beta) / gamma(1.0 + 1.0 / beta),
        }
    }
}

/// ACD(1,1) recursion psi_i = omega + a tau_{i-1} + b psi_{i-1}, tau_i =
/// psi_i eps_i with i.i.d. unit-mean innovations. Stationarity requires
/// a + b < 1; the stationary mean is omega / (1 - a - b).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcdParams {
    pub omega: f64,
    pub a: f64,
    pub b: f64,
    pub innovation: Innovation,
}

impl AcdParams {
    pub fn new(omega: f64, a: f64, b: f64, innovation: Innovation) -> Result<Self, ModelError> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(ModelError::Param(format!("omega must be positive, got {omega}")));
        }
        if !(a.is_finite() && b.is_finite() && a >= 0.0 && b >= 0.0) {
            return Err(ModelError::Param(format!(
                "recursion coefficients must be nonnegative, got a={a}, b={b}"
            )));
        }
        if a + b >= 1.0 {
            return Err(ModelError::Param(format!(
                "nonstationary recursion: a + b = {} must be below 1",
                a + b
            )));
        }
        if let Innovation::Weibull { beta } = innovation {
            if !(beta.is_finite() && beta > 0.0) {
                return Err(ModelError::Param(format!(
                    "innovation shape must be positive, got {beta}"
                )));
            }
        }
        Ok(Self { omega, a, b, innovation })
    }

    pub fn stationary_mean(&self) -> f64 {
        self.omega / (1.0 - self.a - self.b)
    }
}

/// n serially dependent draws from the recursion, after discarding a
/// 1000-step burn-in started at the stationary mean.
pub fn sample_acd(params: &AcdParams, n: usize, seed: u64) -> Vec<f64> {
    const BURN_IN: usize = 1000;
    let mut r = rng(seed);
    let mut psi = params.stationary_mean();
    let mut tau = psi;
    let mut out = Vec::with_capacity(n);
    for i in 0..BURN_IN + n {
        psi = params.omega + params.a * tau + params.b * psi;
        tau = psi * params.innovation.draw(&mut r);
        if i >= BURN_IN {
            out.push(tau);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GeneratorModel {
    Weibull(WeibullParams),
    QExponential(QExpParams),
    Acd(AcdParams),
}

/// A complete, reproducible generation request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub model: GeneratorModel,
    pub n: usize,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn new(model: GeneratorModel, n: usize, seed: u64) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::Param("sample count must be at least 1".into()));
        }
        Ok(Self { model, n, seed })
    }

    pub fn generate(&self) -> Vec<f64> {
        match &self.model {
            GeneratorModel::Weibull(p) => sample_weibull(p, self.n, self.seed),
            GeneratorModel::QExponential(p) => sample_qexp(p, self.n, self.seed),
            GeneratorModel::Acd(p) => sample_acd(p, self.n, self.seed),
        }
    }
}

const FABRICATE_BASE_DATE: (i32, u32, u32) = (2003, 1, 6);

/// Lays duration series out as a CSV tape such that re-extraction recovers
/// the input durations exactly.
///
/// Each series starts on a fresh day. A duration extends the current
/// session block when it fits before the close; otherwise the block is
/// abandoned and the duration is re-anchored in the next session that can
/// hold it (anchor trade at the open, partner trade one duration later), so
/// its value survives the session boundary. A duration longer than every
/// session is unrepresentable as a pair: the wait is split across closes,
/// leaving consecutive trades in different blocks and therefore no spurious
/// duration on re-extraction. A series with no durations becomes a single
/// anchor trade so the stock still appears on the tape.
pub fn fabricate_tape(series: &[DurationSeries], calendar: &SessionCalendar) -> String {
    let mut out = String::from(TAPE_HEADER);
    out.push('\n');
    let (y, m, d) = FABRICATE_BASE_DATE;
    let base = chrono::NaiveDate::from_ymd_opt(y, m, d).expect("valid base date");
    let sessions = calendar.sessions();
    let max_len = sessions.iter().map(|&(o, c)| c - o).max().expect("nonempty calendar");

    for s in series {
        let token = match s.class_filter {
            ClassFilter::PartiallyFilled => "P",
            _ => "F",
        };
        let mut date = base;
        let mut sess = 0usize;
        let mut cursor = sessions[0].0;
        let mut fresh = true;
        let emit = |date: chrono::NaiveDate, t: u32, out: &mut String| {
            out.push_str(&format!("{},{},{},{}\n", s.stock, date, TimeOfDay(t), token));
        };
        let advance = |date: &mut chrono::NaiveDate, sess: &mut usize| {
            *sess += 1;
            if *sess == sessions.len() {
                *sess = 0;
                *date = date.succ_opt().expect("date range");
            }
        };
        if s.centis.is_empty() {
            emit(date, cursor, &mut out);
            continue;
        }
        for &dur in &s.centis {
            let close = sessions[sess].1;
            if !fresh && cursor + dur <= close {
                cursor += dur;
                emit(date, cursor, &mut out);
            } else if dur <= max_len {
                // re-anchor in the next fresh session long enough to hold it
                if !fresh {
                    advance(&mut date, &mut sess);
                }
                while dur > sessions[sess].1 - sessions[sess].0 {
                    advance(&mut date, &mut sess);
                }
                let open = sessions[sess].0;
                emit(date, open, &mut out);
                cursor = open + dur;
                emit(date, cursor, &mut out);
                fresh = false;
            } else {
                // oversize: split the wait across closes, dropping the value
                if fresh {
                    emit(date, cursor, &mut out);
                    fresh = false;
                }
                let mut remaining = dur - (sessions[sess].1 - cursor);
                loop {
                    advance(&mut date, &mut sess);
                    let len = sessions[sess].1 - sessions[sess].0;
                    if remaining <= len {
                        cursor = sessions[sess].0 + remaining;
                        emit(date, cursor, &mut out);
                        break;
                    }
                    remaining -= len;
                }
            }
        }
    }
    out
}

//! Parametric models for rescaled duration distributions.
//!
//! Three families, all written for the rescaled duration `g >= 0`:
//!
//! * Weibull: density `alpha beta g^(beta-1) exp(-alpha g^beta)`, survival
//!   `exp(-alpha g^beta)`.
//! * q-exponential: density `mu [1 + (q-1) mu g]^(q/(1-q))`, survival
//!   `[1 + (q-1) mu g]^(1/(1-q))`, a pure power law `g^(-1/(q-1))` far in the
//!   tail. Only the heavy-tailed branch `q > 1` is representable.
//! * Mittag-Leffler survival `E_beta(-(tau/tau0)^beta)`, the interpolation
//!   between a stretched exponential at short waits and a power law at long
//!   waits.
//!
//! Parameter structs validate on construction; evaluation methods only have
//! to reject out-of-domain arguments.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::special::{gamma, ln_gamma};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("argument outside the model domain: {0}")]
    Domain(String),
    #[error("evaluation did not converge: {0}")]
    Convergence(String),
}

fn require_finite(name: &str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ModelError::Param(format!("{name} must be finite, got {v}")))
    }
}

/// Weibull density/survival parameters: `alpha` scales the argument inside
/// the exponential, `beta` is the stretching exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullParams {
    pub alpha: f64,
    pub beta: f64,
}

impl WeibullParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, ModelError> {
        require_finite("alpha", alpha)?;
        require_finite("beta", beta)?;
        if alpha <= 0.0 || beta <= 0.0 {
            return Err(ModelError::Param(format!(
                "Weibull parameters must be positive, got alpha = {alpha}, beta = {beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// Density at `g >= 0`. For `beta < 1` the density diverges at the
    /// origin, so `g = 0` is out of domain there.
    pub fn pdf(&self, g: f64) -> Result<f64, ModelError> {
        if !g.is_finite() || g < 0.0 {
            return Err(ModelError::Domain(format!("density needs g >= 0, got {g}")));
        }
        if g == 0.0 {
            return if self.beta < 1.0 {
                Err(ModelError::Domain(
                    "density diverges at g = 0 for beta < 1".into(),
                ))
            } else if self.beta == 1.0 {
                Ok(self.alpha)
            } else {
                Ok(0.0)
            };
        }
        Ok(self.ln_pdf(g)?.exp())
    }

    /// Log density at `g > 0`; the form the least-squares objective uses.
    pub fn ln_pdf(&self, g: f64) -> Result<f64, ModelError> {
        if !g.is_finite() || g <= 0.0 {
            return Err(ModelError::Domain(format!(
                "log density needs g > 0, got {g}"
            )));
        }
        let lg = g.ln();
        Ok(self.alpha.ln() + self.beta.ln() + (self.beta - 1.0) * lg
            - self.alpha * (self.beta * lg).exp())
    }

    /// Survival (complementary CDF) at `g >= 0`; equals 1 at the origin.
    pub fn ccdf(&self, g: f64) -> Result<f64, ModelError> {
        if !g.is_finite() || g < 0.0 {
            return Err(ModelError::Domain(format!("survival needs g >= 0, got {g}")));
        }
        Ok((-self.alpha * g.powf(self.beta)).exp())
    }
}

/// q-exponential parameters, heavy-tailed branch only (`q > 1`); `mu` is the
/// density at the origin and the tail decays as `g^(-1/(q-1))` in survival.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QExpParams {
    pub mu: f64,
    pub q: f64,
}

impl QExpParams {
    pub fn new(mu: f64, q: f64) -> Result<Self, ModelError> {
        require_finite("mu", mu)?;
        require_finite("q", q)?;
        if mu <= 0.0 {
            return Err(ModelError::Param(format!("mu must be positive, got {mu}")));
        }
        if q <= 1.0 {
            return Err(ModelError::Param(format!(
                "only the heavy-tailed branch q > 1 is supported, got q = {q}"
            )));
        }
        Ok(Self { mu, q })
    }

    /// Density at `g >= 0`; total on the half line, `pdf(0) = mu`.
    pub fn pdf(&self, g: f64) -> Result<f64, ModelError> {
        if !g.is_finite() || g < 0.0 {
            return Err(ModelError::Domain(format!("density needs g >= 0, got {g}")));
        }
        if g == 0.0 {
            return Ok(self.mu);
        }
        Ok(self.ln_pdf(g)?.exp())
    }

    /// Log density at `g > 0`, evaluated through `ln_1p` so the `q -> 1`
    /// boundary degrades gracefully toward the exponential log density.
    pub fn ln_pdf(&self, g: f64) -> Result<f64, ModelError> {
        if !g.is_finite() || g <= 0.0 {
            return Err(ModelError::Domain(format!(
                "log density needs g > 0, got {g}"
            )));
        }
        let k = self.q - 1.0;
        Ok(self.mu.ln() + (self.q / (1.0 - self.q)) * (k * self.mu * g).ln_1p())
    }

    /// Survival at `g >= 0`; equals 1 at the origin.
    pub fn ccdf(&self, g: f64) -> Result<f64, ModelError> {
        if !g.is_finite() || g < 0.0 {
            return Err(ModelError::Domain(format!("survival needs g >= 0, got {g}")));
        }
        let k = self.q - 1.0;
        Ok(((1.0 / (1.0 - self.q)) * (k * self.mu * g).ln_1p()).exp())
    }

    /// Exponent of the survival power law, `1/(q-1)`.
    pub fn tail_exponent(&self) -> f64 {
        1.0 / (self.q - 1.0)
    }
}

/// Mittag-Leffler survival parameters: `tau0` the scale, `beta` in `(0, 1]`
/// the order; `beta = 1` is the exponential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MittagLefflerParams {
    pub tau0: f64,
    pub beta: f64,
}

/// Short-wait regime boundary: at or below this `tau/tau0` the survival
/// returns the stretched-exponential limit form.
const ML_STRETCHED_BELOW: f64 = 0.1;
/// Long-wait regime boundary: at or above this `tau/tau0` the survival
/// returns the one-term power-law limit form.
const ML_POWER_ABOVE: f64 = 100.0;

impl MittagLefflerParams {
    pub fn new(tau0: f64, beta: f64) -> Result<Self, ModelError> {
        require_finite("tau0", tau0)?;
        require_finite("beta", beta)?;
        if tau0 <= 0.0 {
            return Err(ModelError::Param(format!(
                "tau0 must be positive, got {tau0}"
            )));
        }
        if beta <= 0.0 || beta > 1.0 {
            return Err(ModelError::Param(format!(
                "order must lie in (0, 1], got {beta}"
            )));
        }
        Ok(Self { tau0, beta })
    }

    /// Survival probability at waiting time `tau >= 0`.
    ///
    /// `beta = 1` evaluates `exp(-tau/tau0)` exactly. For `beta < 1` the
    /// evaluation follows the limit-regime structure of the survival law:
    /// at `tau/tau0 <= 0.1` it returns the stretched-exponential limit
    /// `exp(-(tau/tau0)^beta / Gamma(1+beta))`, at `tau/tau0 >= 100` the
    /// power-law limit `(tau/tau0)^(-beta) / Gamma(1-beta)`, and between the
    /// two it evaluates the function itself: the defining series for
    /// `x = (tau/tau0)^beta <= 1` (where it is cancellation-safe) and a
    /// completely monotone spectral integral otherwise. The limit forms are
    /// exact only asymptotically, so the value has a small step at the two
    /// regime boundaries, largest for small `beta`; within each regime it is
    /// monotone non-increasing in `tau`.
    pub fn survival(&self, tau: f64) -> Result<f64, ModelError> {
        if !tau.is_finite() || tau < 0.0 {
            return Err(ModelError::Domain(format!(
                "survival needs tau >= 0, got {tau}"
            )));
        }
        let t = tau / self.tau0;
        if t == 0.0 {
            return Ok(1.0);
        }
        if self.beta == 1.0 {
            return Ok((-t).exp());
        }
        if t <= ML_STRETCHED_BELOW {
            return Ok((-t.powf(self.beta) / gamma(1.0 + self.beta)).exp());
        }
        if t >= ML_POWER_ABOVE {
            return Ok(t.powf(-self.beta) / gamma(1.0 - self.beta));
        }
        let x = t.powf(self.beta);
        if x <= 1.0 {
            ml_series(self.beta, x)
        } else {
            Ok(ml_spectral(self.beta, t))
        }
    }
}

/// Defining series `sum_n (-x)^n / Gamma(beta n + 1)`, safe for `x <= 1`
/// where terms never grow and cancellation stays benign.
fn ml_series(beta: f64, x: f64) -> Result<f64, ModelError> {
    debug_assert!(x > 0.0 && x <= 1.0);
    let lx = x.ln();
    let mut sum = 1.0;
    for n in 1..400 {
        let mag = ((n as f64) * lx - ln_gamma(beta * n as f64 + 1.0)).exp();
        let term = if n % 2 == 0 { mag } else { -mag };
        sum += term;
        if n >= 3 && mag < 1e-17 * sum.abs() {
            return Ok(sum);
        }
    }
    Err(ModelError::Convergence(format!(
        "series for order {beta} at x = {x} did not settle in 400 terms"
    )))
}

/// Spectral representation of `E_beta(-t^beta)` for `0 < beta < 1`, `t > 0`:
///
/// `sin(beta pi)/pi * int_0^inf r^(beta-1) / (r^(2 beta) + 2 r^beta cos(beta pi) + 1) * exp(-r t) dr`
///
/// The integrand is positive, so there is no cancellation at any argument.
/// Trapezoid rule in `u = ln r`; the transformed integrand is smooth and
/// decays exponentially on the left and doubly exponentially on the right,
/// where the trapezoid rule converges spectrally. The step shrinks as
/// `beta -> 1` to resolve the narrowing spectral peak near `r = 1`.
fn ml_spectral(beta: f64, t: f64) -> f64 {
    debug_assert!(beta > 0.0 && beta < 1.0 && t > 0.0);
    let cospb = (beta * std::f64::consts::PI).cos();
    let sinpb = (beta * std::f64::consts::PI).sin();
    let h = ((1.0 - beta) / 5.0).clamp(1e-3, 0.02);
    // e^(beta u) below 1e-19 to the left; e^(-t e^u) below e^-44 to the right
    let u_min = -44.0 / beta;
    let u_max = (44.0 / t).ln().max(0.0) + 1.0;
    let steps = ((u_max - u_min) / h).ceil() as usize;
    let mut acc = 0.0;
    for i in 0..=steps {
        let u = u_min + (u_max - u_min) * (i as f64) / (steps as f64);
        let e = (beta * u).exp();
        let den = e * e + 2.0 * e * cospb + 1.0;
        let f = e / den * (-t * u.exp()).exp();
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        acc += w * f;
    }
    sinpb / std::f64::consts::PI * acc * (u_max - u_min) / (steps as f64)
}

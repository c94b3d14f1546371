//! Model parameters and motility families.
//!
//! The motility function `gamma(v)` multiplies the cell density inside the
//! Laplacian, `u_t = Δ(gamma(v) u) + u (a - b u)`. Every family here is a
//! closed form, so its first two derivatives are exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed set of motility functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum MotilityFamily {
    /// `gamma(v) = (1 + v)^(-m)`.
    Power { m: f64 },
    /// `gamma(v) = exp(-chi v)`.
    Exponential { chi: f64 },
    /// `gamma(v) = 1 - (v - v0) / sqrt(eps + (v - v0)^2)`, convexity changes at `v0`.
    Sigmoid { eps: f64, v0: f64 },
}

/// `gamma`, `gamma'` and `gamma''` at one density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotilityValue {
    pub gamma: f64,
    pub dgamma: f64,
    pub d2gamma: f64,
}

impl MotilityFamily {
    pub fn power(m: f64) -> Self {
        MotilityFamily::Power { m }
    }

    /// Sigmoid with softness 0.1 and inflection at v = 1.
    pub fn default_sigmoid() -> Self {
        MotilityFamily::Sigmoid { eps: 0.1, v0: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            MotilityFamily::Power { m } => m > 0.0 && m.is_finite(),
            MotilityFamily::Exponential { chi } => chi > 0.0 && chi.is_finite(),
            MotilityFamily::Sigmoid { eps, v0 } => eps > 0.0 && eps.is_finite() && v0.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("motility parameters {self:?}")))
        }
    }

    /// Power exponent, if this is the power family.
    pub fn power_exponent(&self) -> Option<f64> {
        match *self {
            MotilityFamily::Power { m } => Some(m),
            _ => None,
        }
    }

    /// Evaluates `(gamma, gamma', gamma'')` at `v >= 0`.
    pub fn eval(&self, v: f64) -> Result<MotilityValue> {
        if !(v >= 0.0) {
            return Err(Error::OutsideModelRange(v));
        }
        Ok(self.eval_unchecked(v))
    }

    /// Same as [`eval`](Self::eval) without the range check; used in inner
    /// loops where `v` is already known to be admissible.
    #[inline]
    pub fn eval_unchecked(&self, v: f64) -> MotilityValue {
        match *self {
            MotilityFamily::Power { m } => {
                let g = (1.0 + v).powf(-m);
                let inv = 1.0 / (1.0 + v);
                MotilityValue {
                    gamma: g,
                    dgamma: -m * g * inv,
                    d2gamma: m * (m + 1.0) * g * inv * inv,
                }
            }
            MotilityFamily::Exponential { chi } => {
                let g = (-chi * v).exp();
                MotilityValue {
                    gamma: g,
                    dgamma: -chi * g,
                    d2gamma: chi * chi * g,
                }
            }
            MotilityFamily::Sigmoid { eps, v0 } => {
                let s = v - v0;
                let q = eps + s * s;
                let rq = q.sqrt();
                // 1 - s/sqrt(q) cancels for s >> sqrt(eps)
                let gamma = if s > 0.0 { eps / (rq * (rq + s)) } else { 1.0 - s / rq };
                MotilityValue {
                    gamma,
                    dgamma: -eps / (q * rq),
                    d2gamma: 3.0 * eps * s / (q * q * rq),
                }
            }
        }
    }

    #[inline]
    pub fn gamma(&self, v: f64) -> f64 {
        self.eval_unchecked(v).gamma
    }

    #[inline]
    pub fn dgamma(&self, v: f64) -> f64 {
        self.eval_unchecked(v).dgamma
    }
}

/// Physical parameters: growth `a`, death `b`, and the motility family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a: f64,
    pub b: f64,
    pub motility: MotilityFamily,
}

impl ModelParams {
    pub fn new(a: f64, b: f64, motility: MotilityFamily) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!("growth rate a = {a} must be > 0")));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidParameter(format!("death rate b = {b} must be > 0")));
        }
        motility.validate()?;
        Ok(Self { a, b, motility })
    }

    pub fn power(a: f64, b: f64, m: f64) -> Result<Self> {
        Self::new(a, b, MotilityFamily::Power { m })
    }

    /// Coexistence density `a / b`.
    pub fn carrying_capacity(&self) -> f64 {
        self.a / self.b
    }

    /// Power exponent or [`Error::NotPowerFamily`].
    pub fn require_power(&self) -> Result<f64> {
        self.motility.power_exponent().ok_or(Error::NotPowerFamily)
    }
}

/// Outcome of sampling the positivity and strict-decay hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub samples: usize,
    pub min_gamma: f64,
    pub max_dgamma: f64,
    pub gamma_positive: bool,
    pub gamma_decreasing: bool,
    /// First sampled density at which either condition fails.
    pub first_violation: Option<f64>,
    /// `gamma(v_max)`, a proxy for `gamma -> 0` at infinity. The existence
    /// of `lim gamma'/gamma` is not checked.
    pub gamma_at_vmax: f64,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.gamma_positive && self.gamma_decreasing
    }
}

const H0_SAMPLES: usize = 10_000;

/// Samples `[0, v_max]` on 10^4 uniform intervals (endpoints included) and
/// checks `gamma > 0`, `gamma' < 0` at every sample.
pub fn validate_h0(family: &MotilityFamily, v_max: f64) -> Result<HypothesisReport> {
    if !(v_max > 0.0) {
        return Err(Error::InvalidParameter(format!("v_max = {v_max} must be > 0")));
    }
    family.validate()?;
    Ok(validate_h0_with(|v| family.eval_unchecked(v), v_max))
}

/// Sampling core of [`validate_h0`], generic over the evaluated function.
pub fn validate_h0_with<F>(eval: F, v_max: f64) -> HypothesisReport
where
    F: Fn(f64) -> MotilityValue,
{
    let mut min_gamma = f64::INFINITY;
    let mut max_dgamma = f64::NEG_INFINITY;
    let mut first_violation = None;
    let mut gamma_at_vmax = f64::NAN;
    for k in 0..=H0_SAMPLES {
        let v = v_max * k as f64 / H0_SAMPLES as f64;
        let val = eval(v);
        min_gamma = min_gamma.min(val.gamma);
        max_dgamma = max_dgamma.max(val.dgamma);
        if first_violation.is_none() && !(val.gamma > 0.0 && val.dgamma < 0.0) {
            first_violation = Some(v);
        }
        gamma_at_vmax = val.gamma;
    }
    HypothesisReport {
        samples: H0_SAMPLES + 1,
        min_gamma,
        max_dgamma,
        gamma_positive: min_gamma > 0.0,
        gamma_decreasing: max_dgamma < 0.0,
        first_violation,
        gamma_at_vmax,
    }
}

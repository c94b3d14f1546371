//! Closed-form wave quantities: decay rates, the admissible speed window,
//! the spatially varying decay rates of the sub-solution, linearizations at
//! the two equilibria, and the leading-edge dispersion relation.

use nalgebra::linalg::Schur;
use nalgebra::{Complex, Matrix4};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Relative slack used when comparing a speed against `2 sqrt(a)` or `c*`.
pub const SPEED_RTOL: f64 = 1e-12;

/// Smaller root of `lambda^2 - c lambda + a = 0`.
pub fn lambda_decay(c: f64, a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("a = {a} must be > 0")));
    }
    let c_min = 2.0 * a.sqrt();
    if !(c >= c_min * (1.0 - SPEED_RTOL)) {
        return Err(Error::SpeedBelowMinimal { c, c_min });
    }
    let disc = ((c - c_min) * (c + c_min)).max(0.0);
    // 2a / (c + sqrt(c^2 - 4a)) avoids cancellation for c >> sqrt(a)
    Ok(2.0 * a / (c + disc.sqrt()))
}

/// Roots `(lambda1, lambda2)` of `mu^2 + c mu - 1 = 0`, `lambda1 < 0 < lambda2`.
pub fn lambda12(c: f64) -> (f64, f64) {
    let r = (c * c + 4.0).sqrt();
    if c >= 0.0 {
        (-(c + r) / 2.0, 2.0 / (c + r))
    } else {
        (-2.0 / (r - c), (r - c) / 2.0)
    }
}

/// Lower bound on the death rate for which the speed window is non-empty.
pub fn b_star(m: f64, a: f64) -> f64 {
    3.0 * m * (1.0 + 2.0 * (a / (1.0 + a)).sqrt() * (2.0 + (1.0 + 1.0 / m).sqrt()))
}

/// Upper end of the speed window.
pub fn c_star(a: f64, b: f64, m: f64) -> f64 {
    (b - 3.0 * m) * (1.0 + a).sqrt() / (3.0 * m) - 2.0 * a.sqrt() * (1.0 + (1.0 + 1.0 / m).sqrt())
}

/// The tail-limit constant; the left limits equal `a/b` when it is below one.
pub fn kappa(m: f64, a: f64) -> f64 {
    let s = (a * (1.0 + a) / (m * (m + 1.0))).sqrt();
    m * s * (s + 1.0).powf(m)
}

/// Super-solution ceiling: smaller root of
/// `m(m+1)/(1+a) eta^2 + (m (1 + c/sqrt(1+a)) - b) eta + a = 0`.
pub fn eta(a: f64, b: f64, m: f64, c: f64) -> Result<f64> {
    let beta = b - m * (1.0 + c / (1.0 + a).sqrt());
    let quad = m * (m + 1.0) / (1.0 + a);
    let discriminant = beta * beta - 4.0 * quad * a;
    if discriminant < 0.0 {
        return Err(Error::EtaUndefined { discriminant });
    }
    let root = discriminant.sqrt();
    if beta > 0.0 {
        Ok(2.0 * a / (beta + root))
    } else {
        Ok((beta - root) / (2.0 * quad))
    }
}

/// A wave speed together with the decay rates and ceiling derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveContext {
    pub c: f64,
    pub a: f64,
    pub b: f64,
    pub m: f64,
    pub lambda: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub eta: f64,
    pub b_star: f64,
    pub c_star: f64,
    /// `b >= b*` and `2 sqrt(a) <= c <= c*` (closed interval).
    pub in_window: bool,
}

impl WaveContext {
    pub fn c_min(&self) -> f64 {
        2.0 * self.a.sqrt()
    }

    /// `c == 2 sqrt(a)` up to [`SPEED_RTOL`].
    pub fn is_critical(&self) -> bool {
        (self.c - self.c_min()).abs() <= SPEED_RTOL * self.c_min()
    }

    /// Abscissa where `exp(-lambda x)` meets `eta`.
    pub fn crossover(&self) -> f64 {
        -self.eta.ln() / self.lambda
    }
}

/// Builds the [`WaveContext`] for a power-family model at speed `c`.
pub fn speed_window(params: &ModelParams, c: f64) -> Result<WaveContext> {
    let m = params.require_power()?;
    let (a, b) = (params.a, params.b);
    let lambda = lambda_decay(c, a)?;
    let (lambda1, lambda2) = lambda12(c);
    let eta = eta(a, b, m, c)?;
    let bs = b_star(m, a);
    let cs = c_star(a, b, m);
    let c_min = 2.0 * a.sqrt();
    let in_window = b >= bs * (1.0 - SPEED_RTOL)
        && c >= c_min * (1.0 - SPEED_RTOL)
        && c <= cs * (1.0 + SPEED_RTOL);
    Ok(WaveContext {
        c,
        a,
        b,
        m,
        lambda,
        lambda1,
        lambda2,
        eta,
        b_star: bs,
        c_star: cs,
        in_window,
    })
}

/// `ln(1 + e^l)` without overflow.
fn softplus(l: f64) -> f64 {
    if l > 35.0 {
        l + (-l).exp()
    } else {
        l.exp().ln_1p()
    }
}

/// The sub-solution's spatially varying decay rates.
///
/// `theta1` solves `phi(x)^(-m) theta^2 - c theta + a = 0` with
/// `phi(x) = 1 + exp(-lambda x)/(1+a)`; `theta2 = theta1 + shift`, where the
/// shift is `lambda/4` at the minimal speed and `lambda/k0` above it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaBundle {
    pub a: f64,
    pub c: f64,
    pub m: f64,
    pub lambda: f64,
    pub critical: bool,
    /// `1 + 2 max{2 lambda/(c - 2 lambda), 2}` above the minimal speed, 4 at it.
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
}

/// Pointwise values of `theta1` and its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaValue {
    pub theta: f64,
    pub dtheta: f64,
    pub d2theta: f64,
}

pub fn theta_bundle(ctx: &WaveContext) -> ThetaBundle {
    let (a, c, m, lambda) = (ctx.a, ctx.c, ctx.m, ctx.lambda);
    let critical = ctx.is_critical();
    let k0 = if critical {
        4.0
    } else {
        1.0 + 2.0 * (2.0 * lambda / (c - 2.0 * lambda)).max(2.0)
    };
    let k1 = 0.5 * a * (m / (1.0 + a)).sqrt();
    let k2 = if critical {
        f64::INFINITY
    } else {
        let root = (c * c - 4.0 * a).max(0.0).sqrt();
        4.0 * a * a * m * lambda / ((c + root).powi(2) * root * (1.0 + a))
    };
    ThetaBundle {
        a,
        c,
        m,
        lambda,
        critical,
        k0,
        k1,
        k2,
    }
}

impl ThetaBundle {
    /// Constant offset `theta2 - theta1`.
    pub fn shift(&self) -> f64 {
        self.lambda / self.k0
    }

    /// `phi(x)^(-m)`.
    pub fn phi_pow(&self, x: f64) -> f64 {
        let log_eps = -self.lambda * x - self.a.ln_1p();
        (-self.m * softplus(log_eps)).exp()
    }

    /// `theta1` with its first two derivatives, from the closed forms.
    pub fn theta1(&self, x: f64) -> ThetaValue {
        let (a, c, m, lambda) = (self.a, self.c, self.m, self.lambda);
        let log_eps = -lambda * x - a.ln_1p();
        let ln_phi = softplus(log_eps);
        // 1 - phi^(-m), accurate when phi -> 1
        let one_minus = -(-m * ln_phi).exp_m1();
        let c_min = 2.0 * a.sqrt();
        let rho2 = ((c - c_min) * (c + c_min)).max(0.0) + 4.0 * a * one_minus;
        let rho = rho2.sqrt();
        let theta = 2.0 * a / (c + rho);
        if rho == 0.0 {
            return ThetaValue {
                theta,
                dtheta: 0.0,
                d2theta: 0.0,
            };
        }
        // eps / phi^(m+1) and eps / phi in log space
        let eps_over_phi_m1 = (log_eps - (m + 1.0) * ln_phi).exp();
        let eps_over_phi = (log_eps - ln_phi).exp();
        let dtheta = 4.0 * a * a * m * lambda * eps_over_phi_m1 / (rho * (c + rho).powi(2));
        let bracket = 1.0
            - (4.0 * a * m * eps_over_phi_m1 / (rho * (c + rho))
                + 2.0 * a * m * eps_over_phi_m1 / rho2
                + (m + 1.0) * eps_over_phi);
        ThetaValue {
            theta,
            dtheta,
            d2theta: -lambda * dtheta * bracket,
        }
    }

    /// `theta2 = theta1 + shift`; derivatives coincide with those of `theta1`.
    pub fn theta2(&self, x: f64) -> ThetaValue {
        let t = self.theta1(x);
        ThetaValue {
            theta: t.theta + self.shift(),
            ..t
        }
    }

    /// Upper envelope of `theta1'` beyond the matching point.
    pub fn dtheta1_envelope(&self, x: f64) -> f64 {
        if self.critical {
            2.0 * self.k1 * (-0.5 * self.lambda * x).exp()
        } else {
            2.0 * self.k2 * (-self.lambda * x).exp()
        }
    }

    /// Lower envelope of `theta1''` beyond the matching point (negative).
    pub fn d2theta1_envelope(&self, x: f64) -> f64 {
        if self.critical {
            -self.lambda * self.k1 * (-0.5 * self.lambda * x).exp()
        } else {
            -2.0 * self.lambda * self.k2 * (-self.lambda * x).exp()
        }
    }
}

/// Complex number for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct C64 {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Equilibrium {
    Origin,
    Coexistence,
}

/// Linearization of the traveling-wave ODE in `(U, U', V, V')`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearizationReport {
    pub equilibrium: Equilibrium,
    pub c: f64,
    pub matrix: [[f64; 4]; 4],
    pub eigenvalues: Vec<C64>,
    /// Monic characteristic polynomial `[p0, p1, p2, p3, 1]` of `matrix`.
    pub char_poly: [f64; 5],
    /// Largest relative residual of the eigenvalues in `char_poly`.
    pub max_residual: f64,
    pub sigma1: f64,
    pub sigma2: Option<f64>,
    /// Real root of `omega^4 - B omega^2 + a/sigma1 = 0`, reported at `c = 0`.
    pub hopf_omega: Option<f64>,
    pub oscillation_condition_holds: Option<bool>,
}

/// Coefficients `[p0, p1, p2, p3, 1]` of `det(mu I - A)` by Faddeev-LeVerrier.
pub fn characteristic_polynomial(mat: &Matrix4<f64>) -> [f64; 5] {
    let n = 4;
    let mut coeffs = [0.0; 5];
    coeffs[n] = 1.0;
    let mut mk = Matrix4::<f64>::zeros();
    for k in 1..=n {
        mk = mat * mk + Matrix4::identity() * coeffs[n - k + 1];
        coeffs[n - k] = -(mat * mk).trace() / k as f64;
    }
    coeffs
}

/// Eigenvalues by shifted real Schur; the unshifted iteration can stall on
/// spectra symmetric about the imaginary axis.
fn eigenvalues4(mat: &Matrix4<f64>) -> Result<Vec<Complex<f64>>> {
    for shift in [0.0, 0.37, -0.61, 1.3] {
        let shifted = mat + Matrix4::identity() * shift;
        if let Some(schur) = Schur::try_new(shifted, f64::EPSILON, 5000) {
            return Ok(schur.complex_eigenvalues().iter().map(|z| z - shift).collect());
        }
    }
    Err(Error::NoConvergence {
        stage: "eigenvalues",
        t: 0.0,
        increment: f64::NAN,
    })
}

fn poly_residual(coeffs: &[f64; 5], z: Complex<f64>) -> f64 {
    let mut value = Complex::new(0.0, 0.0);
    let mut scale = 0.0;
    for (k, &ck) in coeffs.iter().enumerate().rev() {
        value = value * z + ck;
        scale += ck.abs() * z.norm().powi(k as i32);
    }
    value.norm() / scale.max(f64::MIN_POSITIVE)
}

pub fn linearize(params: &ModelParams, c: f64, at: Equilibrium) -> Result<LinearizationReport> {
    let (a, b) = (params.a, params.b);
    let (matrix, sigma1, sigma2) = match at {
        Equilibrium::Origin => {
            let g0 = params.motility.eval(0.0)?.gamma;
            let m = Matrix4::new(
                0.0, 1.0, 0.0, 0.0, //
                -a / g0, -c / g0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                -1.0, 0.0, 1.0, -c,
            );
            (m, g0, None)
        }
        Equilibrium::Coexistence => {
            let val = params.motility.eval(a / b)?;
            let (s1, s2) = (val.gamma, val.dgamma);
            if !(s1 > 0.0 && s1.is_finite()) {
                return Err(Error::InvalidParameter(format!("gamma(a/b) = {s1}")));
            }
            let m = Matrix4::new(
                0.0, 1.0, 0.0, 0.0, //
                a * (b + s2) / (s1 * b), -c / s1, -a * s2 / (b * s1), a * s2 * c / (b * s1), //
                0.0, 0.0, 0.0, 1.0, //
                -1.0, 0.0, 1.0, -c,
            );
            (m, s1, Some(s2))
        }
    };
    let char_poly = characteristic_polynomial(&matrix);
    let eig = eigenvalues4(&matrix)?;
    let mut eigenvalues: Vec<C64> = eig.iter().map(|z| C64 { re: z.re, im: z.im }).collect();
    eigenvalues.sort_by(|p, q| p.re.total_cmp(&q.re).then(p.im.total_cmp(&q.im)));
    let max_residual = eig.iter().map(|&z| poly_residual(&char_poly, z)).fold(0.0, f64::max);

    let (hopf_omega, oscillation_condition_holds) = match (at, sigma2) {
        (Equilibrium::Coexistence, Some(s2)) => {
            let omega = if c == 0.0 { hopf_omega(a, b, sigma1, s2) } else { None };
            (omega, Some(s2.abs() < general_oscillation_rhs(a, b, sigma1)))
        }
        _ => (None, None),
    };

    let mut rows = [[0.0; 4]; 4];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = matrix[(i, j)];
        }
    }
    Ok(LinearizationReport {
        equilibrium: at,
        c,
        matrix: rows,
        eigenvalues,
        char_poly,
        max_residual,
        sigma1,
        sigma2,
        hopf_omega,
        oscillation_condition_holds,
    })
}

/// Largest real `omega` with `omega^4 - B omega^2 + a/sigma1 = 0`, if any.
fn hopf_omega(a: f64, b: f64, s1: f64, s2: f64) -> Option<f64> {
    let big_b = a * (b + s2) / (s1 * b) + 1.0;
    let cc = a / s1;
    let disc = big_b * big_b - 4.0 * cc;
    if disc < 0.0 {
        return None;
    }
    let w2 = (big_b + disc.sqrt()) / 2.0;
    (w2 >= 0.0).then(|| w2.sqrt())
}

/// `(b/a) sigma1 (sqrt(a/sigma1) - 1)^2`.
fn general_oscillation_rhs(a: f64, b: f64, s1: f64) -> f64 {
    (b / a) * s1 * ((a / s1).sqrt() - 1.0).powi(2)
}

/// Whether the coexistence linearization admits periodic orbits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillationCondition {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

/// For the power family compares `sqrt(m)` with
/// `sqrt((1+t)/t) |sqrt(a (1+t)^m) - 1|`, `t = a/b`; other families use
/// `|gamma'(a/b)| < (b/a) gamma(a/b) (sqrt(a/gamma(a/b)) - 1)^2`.
pub fn oscillation_condition(params: &ModelParams) -> Result<OscillationCondition> {
    let (a, b) = (params.a, params.b);
    let (lhs, rhs) = match params.motility.power_exponent() {
        Some(m) => {
            let t = a / b;
            let rhs = ((1.0 + t) / t).sqrt() * ((a * (1.0 + t).powf(m)).sqrt() - 1.0).abs();
            (m.sqrt(), rhs)
        }
        None => {
            let val = params.motility.eval(a / b)?;
            (val.dgamma.abs(), general_oscillation_rhs(a, b, val.gamma))
        }
    };
    Ok(OscillationCondition {
        holds: lhs < rhs,
        lhs,
        rhs,
    })
}

/// Branch switch for [`leading_edge_speed_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum EdgeThreshold {
    /// Switch at `lambda0 = sqrt(a)`, as printed for `gamma(0) = 1`.
    #[default]
    Literal,
    /// Switch at the minimizer `sqrt(a / gamma(0))` of `gamma(0) l + a/l`.
    Minimizer,
}

/// Asymptotic speed selected by an initial decay rate `lambda0`.
pub fn leading_edge_speed(lambda0: f64, a: f64, gamma0: f64) -> f64 {
    leading_edge_speed_with(lambda0, a, gamma0, EdgeThreshold::Literal)
}

pub fn leading_edge_speed_with(lambda0: f64, a: f64, gamma0: f64, threshold: EdgeThreshold) -> f64 {
    let switch = match threshold {
        EdgeThreshold::Literal => a.sqrt(),
        EdgeThreshold::Minimizer => (a / gamma0).sqrt(),
    };
    if lambda0 > 0.0 && lambda0 < switch {
        gamma0 * lambda0 + a / lambda0
    } else {
        2.0 * (gamma0 * a).sqrt()
    }
}

/// Leading-edge amplitude ratio `A/B` of `u` to `v`.
pub fn amplitude_ratio(lambda0: f64, a: f64, gamma0: f64) -> f64 {
    1.0 + a + (gamma0 - 1.0) * lambda0 * lambda0
}

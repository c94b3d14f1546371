//! Front position, speed, decay rate, profile class and ring radius diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::Trajectory;

/// Rightmost crossing of `level` by a profile decreasing to the right, linearly interpolated.
pub fn front_position(u: &[f64], x0: f64, h: f64, level: f64) -> Result<f64> {
    for i in (0..u.len().saturating_sub(1)).rev() {
        let (p, q) = (u[i], u[i + 1]);
        if p >= level && q < level {
            let t = (p - level) / (p - q);
            return Ok(x0 + (i as f64 + t) * h);
        }
    }
    Err(Error::NoCrossing(level))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedFitOptions {
    /// Leading fraction of the time span treated as transient.
    pub skip_fraction: f64,
    pub min_samples: usize,
}

impl Default for SpeedFitOptions {
    fn default() -> Self {
        Self {
            skip_fraction: 0.2,
            min_samples: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontSeries {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub c_est: f64,
    pub stderr: f64,
    pub r2: f64,
    pub fit_window: (f64, f64),
    pub samples: usize,
}

/// Least-squares slope of `x_f(t)` over the fit window with its standard error.
pub fn wave_speed(times: &[f64], positions: &[f64], opts: &SpeedFitOptions) -> Result<FrontSeries> {
    let n = times.len().min(positions.len());
    if n == 0 {
        return Err(Error::InsufficientSamples {
            needed: opts.min_samples,
            got: 0,
        });
    }
    let (t_first, t_last) = (times[0], times[n - 1]);
    let t_start = t_first + opts.skip_fraction * (t_last - t_first);
    let idx: Vec<usize> = (0..n).filter(|&i| times[i] >= t_start).collect();
    if idx.len() < opts.min_samples.max(3) {
        return Err(Error::InsufficientSamples {
            needed: opts.min_samples.max(3),
            got: idx.len(),
        });
    }
    let t: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
    let x: Vec<f64> = idx.iter().map(|&i| positions[i]).collect();
    let fit = linear_fit(&t, &x);
    Ok(FrontSeries {
        times: times[..n].to_vec(),
        positions: positions[..n].to_vec(),
        c_est: fit.slope,
        stderr: fit.slope_stderr,
        r2: fit.r2,
        fit_window: (t[0], t[t.len() - 1]),
        samples: t.len(),
    })
}

struct LinearFit {
    slope: f64,
    intercept: f64,
    slope_stderr: f64,
    r2: f64,
}

fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&p, &q) in x.iter().zip(y) {
        sxx += (p - mx) * (p - mx);
        sxy += (p - mx) * (q - my);
        syy += (q - my) * (q - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(&p, &q)| {
            let r = q - (intercept + slope * p);
            r * r
        })
        .sum();
    let slope_stderr = if x.len() > 2 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    let r2 = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    LinearFit {
        slope,
        intercept,
        slope_stderr,
        r2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub lambda: f64,
    pub amplitude: f64,
    pub points: usize,
}

/// Fits `ln u = ln A - lambda z` on the rightmost run of nodes with `u` in `(lo, hi)`.
pub fn decay_fit(z: &[f64], u: &[f64], lo: f64, hi: f64) -> Result<DecayFit> {
    let inside = |w: f64| w > lo && w < hi && w.is_finite();
    let n = z.len().min(u.len());
    let Some(end) = (0..n).rev().find(|&i| inside(u[i])) else {
        return Err(Error::WindowTooSmall(0));
    };
    let mut start = end;
    while start > 0 && inside(u[start - 1]) {
        start -= 1;
    }
    let count = end - start + 1;
    if count < 5 {
        return Err(Error::WindowTooSmall(count));
    }
    let ln: Vec<f64> = u[start..=end].iter().map(|w| w.ln()).collect();
    let fit = linear_fit(&z[start..=end], &ln);
    Ok(DecayFit {
        lambda: -fit.slope,
        amplitude: fit.intercept.exp(),
        points: count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileLabel {
    Monotone,
    OscillatoryTrailingEdge,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileClass {
    pub label: ProfileLabel,
    pub crossing_count: usize,
    /// `max(u - equilibrium, 0)` left of the front.
    pub overshoot: f64,
    pub front: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    /// Largest overshoot, relative to the equilibrium, still called monotone.
    pub monotone_overshoot: f64,
    /// Smallest overshoot, relative to the equilibrium, called oscillatory.
    pub oscillatory_overshoot: f64,
    pub oscillatory_crossings: usize,
    /// Deviations below this (relative) are sign-neutral when counting crossings.
    pub dead_band: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            monotone_overshoot: 1e-3,
            oscillatory_overshoot: 1e-2,
            oscillatory_crossings: 3,
            dead_band: 1e-9,
        }
    }
}

/// Counts sign changes of `u - equilibrium` left of the half-equilibrium front.
pub fn classify_profile(
    u: &[f64],
    x0: f64,
    h: f64,
    equilibrium: f64,
    opts: &ClassifyOptions,
) -> Result<ProfileClass> {
    let front = front_position(u, x0, h, 0.5 * equilibrium)?;
    let band = opts.dead_band * equilibrium;
    let mut crossings = 0;
    let mut last_sign = 0i8;
    let mut overshoot = 0.0f64;
    for (i, &w) in u.iter().enumerate() {
        if x0 + i as f64 * h >= front {
            break;
        }
        let d = w - equilibrium;
        overshoot = overshoot.max(d);
        let s = if d > band {
            1
        } else if d < -band {
            -1
        } else {
            0
        };
        if s != 0 {
            if last_sign != 0 && s != last_sign {
                crossings += 1;
            }
            last_sign = s;
        }
    }
    let label = if crossings <= 1 && overshoot <= opts.monotone_overshoot * equilibrium {
        ProfileLabel::Monotone
    } else if crossings >= opts.oscillatory_crossings
        && overshoot > opts.oscillatory_overshoot * equilibrium
    {
        ProfileLabel::OscillatoryTrailingEdge
    } else {
        ProfileLabel::Indeterminate
    };
    Ok(ProfileClass {
        label,
        crossing_count: crossings,
        overshoot,
        front,
    })
}

/// Read-only view of a 2-D nodal field, row-major with `x` fastest.
#[derive(Debug, Clone, Copy)]
pub struct Field2d<'a> {
    pub values: &'a [f64],
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
}

impl Field2d<'_> {
    /// Bilinear interpolation; `None` outside the grid.
    pub fn sample(&self, x: f64, y: f64) -> Option<f64> {
        let fx = (x - self.x0) / self.h;
        let fy = (y - self.y0) / self.h;
        let (mx, my) = ((self.nx - 1) as f64, (self.ny - 1) as f64);
        if !(0.0..=mx).contains(&fx) || !(0.0..=my).contains(&fy) {
            return None;
        }
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        let (s, t) = (fx - i as f64, fy - j as f64);
        let at = |i: usize, j: usize| self.values[j * self.nx + i];
        Some(
            (1.0 - s) * (1.0 - t) * at(i, j)
                + s * (1.0 - t) * at(i + 1, j)
                + (1.0 - s) * t * at(i, j + 1)
                + s * t * at(i + 1, j + 1),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingOptions {
    pub rays: usize,
    pub max_radius: f64,
    /// Radial sampling step; the grid spacing when `None`.
    pub dr: Option<f64>,
}

impl Default for RingOptions {
    fn default() -> Self {
        Self {
            rays: 64,
            max_radius: 9.0,
            dr: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingMetrics {
    /// Zero when the profile is above `level` all the way to the center.
    pub r_inner: f64,
    pub r_peak: f64,
    pub r_outer: f64,
    pub radii: Vec<f64>,
    pub mean_profile: Vec<f64>,
}

/// Azimuthal mean over `opts.rays` rays; stops at the first radius with no sample inside the grid.
pub fn radial_profile(field: &Field2d<'_>, center: (f64, f64), opts: &RingOptions) -> (Vec<f64>, Vec<f64>) {
    let dr = opts.dr.unwrap_or(field.h);
    let nr = (opts.max_radius / dr).floor() as usize + 1;
    let mut radii = Vec::with_capacity(nr);
    let mut mean = Vec::with_capacity(nr);
    for k in 0..nr {
        let r = k as f64 * dr;
        let (mut sum, mut cnt) = (0.0, 0usize);
        for q in 0..opts.rays {
            let th = 2.0 * std::f64::consts::PI * q as f64 / opts.rays as f64;
            if let Some(w) = field.sample(center.0 + r * th.cos(), center.1 + r * th.sin()) {
                sum += w;
                cnt += 1;
            }
        }
        if cnt == 0 {
            break;
        }
        radii.push(r);
        mean.push(sum / cnt as f64);
    }
    (radii, mean)
}

/// Azimuthally averaged radial profile and its crossings of `level` around the maximum.
pub fn ring_metrics(
    field: &Field2d<'_>,
    center: (f64, f64),
    level: f64,
    opts: &RingOptions,
) -> Result<RingMetrics> {
    let dr = opts.dr.unwrap_or(field.h);
    let (radii, mean) = radial_profile(field, center, opts);
    if mean.len() < 3 {
        return Err(Error::NoRing(level));
    }
    let kp = (0..mean.len())
        .max_by(|&i, &j| mean[i].total_cmp(&mean[j]))
        .unwrap_or(0);
    if mean[kp] < level {
        return Err(Error::NoRing(level));
    }
    let r_peak = if kp > 0 && kp + 1 < mean.len() {
        let (l, c, r) = (mean[kp - 1], mean[kp], mean[kp + 1]);
        let den = l - 2.0 * c + r;
        if den < 0.0 {
            radii[kp] + 0.5 * dr * (l - r) / den
        } else {
            radii[kp]
        }
    } else {
        radii[kp]
    };
    let cross = |k: usize, j: usize| {
        let t = (mean[k] - level) / (mean[k] - mean[j]);
        radii[k] + t * (radii[j] - radii[k])
    };
    let r_outer = (kp..mean.len() - 1)
        .find(|&k| mean[k + 1] < level)
        .map(|k| cross(k, k + 1))
        .ok_or(Error::NoRing(level))?;
    let r_inner = (1..=kp)
        .rev()
        .find(|&k| mean[k - 1] < level)
        .map(|k| cross(k, k - 1))
        .unwrap_or(0.0);
    Ok(RingMetrics {
        r_inner,
        r_peak,
        r_outer,
        radii,
        mean_profile: mean,
    })
}

/// Level used for ring radii.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RingLevel {
    Fixed(f64),
    /// Midway between the extremes of the azimuthal mean, per snapshot.
    HalfHeight,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsOptions {
    pub fit: SpeedFitOptions,
    pub classify: ClassifyOptions,
    pub ring: RingOptions,
    pub ring_level: RingLevel,
    /// Decay-fit window on `u`.
    pub decay_window: (f64, f64),
}

impl Default for MetricsOptions {
    fn default() -> Self {
        Self {
            fit: SpeedFitOptions::default(),
            classify: ClassifyOptions::default(),
            ring: RingOptions::default(),
            ring_level: RingLevel::HalfHeight,
            decay_window: (1e-12, 1e-2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingSummary {
    pub level: f64,
    pub r_inner: f64,
    pub r_peak: f64,
    pub r_outer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMetrics {
    pub t: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub front: Option<f64>,
    pub class: Option<ProfileClass>,
    pub ring: Option<RingSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMetrics {
    pub snapshots: Vec<SnapshotMetrics>,
    pub speed: Option<FrontSeries>,
    pub speed_error: Option<String>,
    /// Leading-edge fit of the final `u` (1-D).
    pub decay: Option<DecayFit>,
    pub final_class: Option<ProfileClass>,
    /// Longest run of strictly increasing `r_outer` across consecutive snapshots, in snapshots.
    pub ring_growth_run: usize,
}

/// Front, class and ring diagnostics for every snapshot plus the speed fit.
pub fn trajectory_metrics(tr: &Trajectory, opts: &MetricsOptions) -> TrajectoryMetrics {
    let eq = tr.config.params.carrying_capacity();
    let one_d = tr.ny == 1;
    let center = (
        tr.origin.0 + 0.5 * (tr.nx - 1) as f64 * tr.h,
        tr.origin.1 + 0.5 * (tr.ny - 1) as f64 * tr.h,
    );
    let snapshots: Vec<SnapshotMetrics> = tr
        .snapshots
        .iter()
        .map(|s| {
            let class = one_d
                .then(|| classify_profile(&s.u, tr.origin.0, tr.h, eq, &opts.classify).ok())
                .flatten();
            let ring = (!one_d)
                .then(|| {
                    let field = Field2d {
                        values: &s.u,
                        nx: tr.nx,
                        ny: tr.ny,
                        x0: tr.origin.0,
                        y0: tr.origin.1,
                        h: tr.h,
                    };
                    let level = match opts.ring_level {
                        RingLevel::Fixed(l) => l,
                        RingLevel::HalfHeight => {
                            let (_, prof) = radial_profile(&field, center, &opts.ring);
                            let (hi, lo) = prof
                                .iter()
                                .fold((f64::MIN, f64::MAX), |(a, b), &w| (a.max(w), b.min(w)));
                            0.5 * (hi + lo)
                        }
                    };
                    ring_metrics(&field, center, level, &opts.ring)
                        .ok()
                        .map(|m| RingSummary {
                            level,
                            r_inner: m.r_inner,
                            r_peak: m.r_peak,
                            r_outer: m.r_outer,
                        })
                })
                .flatten();
            SnapshotMetrics {
                t: s.t,
                mass_u: s.mass_u,
                mass_v: s.mass_v,
                front: s.front,
                class,
                ring,
            }
        })
        .collect();
    let (speed, speed_error) = if one_d {
        let (t, x) = tr.front_series();
        match wave_speed(&t, &x, &opts.fit) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };
    let last = tr.last();
    let decay = one_d
        .then(|| {
            let z: Vec<f64> = (0..tr.nx).map(|i| tr.origin.0 + i as f64 * tr.h).collect();
            decay_fit(&z, &last.u, opts.decay_window.0, opts.decay_window.1).ok()
        })
        .flatten();
    let final_class = snapshots.last().and_then(|s| s.class);
    let mut ring_growth_run = 0;
    let mut run = 0;
    let mut prev: Option<f64> = None;
    for s in &snapshots {
        match (prev, s.ring.as_ref()) {
            (Some(p), Some(r)) if r.r_outer > p => run += 1,
            (_, Some(_)) => run = 1,
            _ => run = 0,
        }
        ring_growth_run = ring_growth_run.max(run);
        prev = s.ring.as_ref().map(|r| r.r_outer);
    }
    TrajectoryMetrics {
        snapshots,
        speed,
        speed_error,
        decay,
        final_class,
        ring_growth_run,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_front_interpolates_between_nodes() {
        let u = [1.0, 1.0, 1.0, 0.0, 0.0];
        let x = front_position(&u, 0.0, 0.5, 0.5).unwrap();
        assert!((x - 1.25).abs() < 1e-15);
        assert!(matches!(front_position(&[0.0; 8], 0.0, 1.0, 0.5), Err(Error::NoCrossing(_))));
    }

    #[test]
    fn logistic_front_crossing() {
        let h = 0.05;
        let u: Vec<f64> = (0..4001)
            .map(|i| 1.0 / (1.0 + (2.0 * (i as f64 * h - 20.0)).exp()))
            .collect();
        assert!((front_position(&u, 0.0, h, 0.5).unwrap() - 20.0).abs() < h);
    }

    #[test]
    fn front_is_translation_equivariant() {
        let h = 0.1;
        let base: Vec<f64> = (0..300).map(|i| (-(i as f64 * h - 7.3)).exp().min(1.0)).collect();
        let x = front_position(&base, 0.0, h, 0.3).unwrap();
        for s in [1usize, 7, 40] {
            let mut shifted = vec![1.0; s];
            shifted.extend_from_slice(&base);
            let y = front_position(&shifted, 0.0, h, 0.3).unwrap();
            assert!((y - x - s as f64 * h).abs() < 1e-12);
        }
    }

    #[test]
    fn speed_of_noisy_linear_series() {
        let sigma = 1e-3;
        // deterministic pseudo-noise with unit variance scale
        let t: Vec<f64> = (0..200).map(|i| i as f64 * 0.5).collect();
        let x: Vec<f64> = t
            .iter()
            .enumerate()
            .map(|(i, &s)| 2.0 * s + sigma * ((i as f64 * 12.9898).sin() * 43758.5453).fract())
            .collect();
        let fit = wave_speed(&t, &x, &SpeedFitOptions::default()).unwrap();
        assert!((fit.c_est - 2.0).abs() < 3.0 * fit.stderr.max(sigma / 10.0));
        assert!(fit.fit_window.0 >= 0.2 * 99.5);
    }

    #[test]
    fn speed_invariances() {
        let t: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let x: Vec<f64> = t.iter().map(|s| 0.6 * s + (0.3 * s).sin()).collect();
        let opts = SpeedFitOptions::default();
        let base = wave_speed(&t, &x, &opts).unwrap().c_est;
        let shifted: Vec<f64> = x.iter().map(|p| p + 11.0).collect();
        assert!((wave_speed(&t, &shifted, &opts).unwrap().c_est - base).abs() < 1e-12);
        let slow: Vec<f64> = t.iter().map(|s| 3.0 * s).collect();
        assert!((wave_speed(&slow, &x, &opts).unwrap().c_est - base / 3.0).abs() < 1e-12);
        let still = vec![4.0; 50];
        assert_eq!(wave_speed(&t, &still, &opts).unwrap().c_est, 0.0);
        assert!(matches!(
            wave_speed(&t[..8], &x[..8], &opts),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn decay_fit_recovers_exponential() {
        let z: Vec<f64> = (0..2000).map(|i| i as f64 * 0.05).collect();
        for amp in [1e-6, 1.0, 1e6] {
            let u: Vec<f64> = z.iter().map(|s| amp * (-0.5 * s).exp()).collect();
            let fit = decay_fit(&z, &u, 1e-12, 1e-2).unwrap();
            assert!((fit.lambda - 0.5).abs() < 1e-10 * 0.5);
            assert!((fit.amplitude - amp).abs() < 1e-10 * amp);
        }
        assert!(matches!(
            decay_fit(&z, &vec![1.0; 2000], 1e-12, 1e-2),
            Err(Error::WindowTooSmall(0))
        ));
    }

    fn with_bumps(amp: f64, count: usize) -> Vec<f64> {
        let h = 0.1;
        (0..1000)
            .map(|i| {
                let x = i as f64 * h;
                let front = 1.0 / (1.0 + (x - 60.0).exp());
                let ripple = if x < 40.0 && x > 40.0 - 2.0 * count as f64 {
                    amp * (std::f64::consts::PI * x).sin()
                } else {
                    0.0
                };
                front + ripple
            })
            .collect()
    }

    #[test]
    fn classification_labels() {
        let opts = ClassifyOptions::default();
        let mono = with_bumps(0.0, 0);
        let c = classify_profile(&mono, 0.0, 0.1, 1.0, &opts).unwrap();
        assert_eq!(c.label, ProfileLabel::Monotone);
        assert!((c.front - 60.0).abs() < 0.1);

        let osc = with_bumps(0.05, 3);
        let c = classify_profile(&osc, 0.0, 0.1, 1.0, &opts).unwrap();
        assert_eq!(c.label, ProfileLabel::OscillatoryTrailingEdge);
        assert!(c.crossing_count >= 3);

        // one large bump: overshoot above 1% but too few crossings
        let h = 0.1;
        let single: Vec<f64> = (0..1000)
            .map(|i| {
                let x = i as f64 * h;
                1.0 / (1.0 + (x - 60.0).exp()) + 0.05 * (-(x - 30.0) * (x - 30.0)).exp()
            })
            .collect();
        let c = classify_profile(&single, 0.0, h, 1.0, &opts).unwrap();
        assert_eq!(c.label, ProfileLabel::Indeterminate);
    }

    #[test]
    fn classification_is_translation_invariant() {
        let opts = ClassifyOptions::default();
        let osc = with_bumps(0.05, 3);
        let base = classify_profile(&osc, 0.0, 0.1, 1.0, &opts).unwrap();
        let moved = classify_profile(&osc, -13.0, 0.1, 1.0, &opts).unwrap();
        assert_eq!(base.label, moved.label);
        assert_eq!(base.crossing_count, moved.crossing_count);
    }

    #[test]
    fn annulus_ring_radii() {
        let h = 0.05;
        let n = 401;
        let x0 = -10.0;
        let values: Vec<f64> = (0..n * n)
            .map(|k| {
                let (i, j) = (k % n, k / n);
                let r = ((x0 + i as f64 * h).powi(2) + (x0 + j as f64 * h).powi(2)).sqrt();
                (-(r - 5.0) * (r - 5.0)).exp()
            })
            .collect();
        let f = Field2d {
            values: &values,
            nx: n,
            ny: n,
            x0,
            y0: x0,
            h,
        };
        let m = ring_metrics(&f, (0.0, 0.0), 0.5, &RingOptions::default()).unwrap();
        let w = 2f64.ln().sqrt();
        assert!((m.r_peak - 5.0).abs() < h);
        assert!((m.r_inner - (5.0 - w)).abs() < h);
        assert!((m.r_outer - (5.0 + w)).abs() < h);

        let flat = vec![0.3; n * n];
        let f = Field2d { values: &flat, ..f };
        assert!(matches!(
            ring_metrics(&f, (0.0, 0.0), 0.5, &RingOptions::default()),
            Err(Error::NoRing(_))
        ));
    }
}

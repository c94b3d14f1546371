use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use wavemotil_core::analysis::{
    b_star, c_star, eta, kappa, leading_edge_speed_with, linearize, oscillation_condition, speed_window,
    Equilibrium,
};
use wavemotil_core::certificates::certify_pair_with;
use wavemotil_core::frontmetrics::{decay_fit, trajectory_metrics, wave_speed, MetricsOptions, ProfileLabel};
use wavemotil_core::pde::{simulate as run_simulation, Trajectory};
use wavemotil_core::waveode::{traveling_wave, verify_profile};
use wavemotil_core::{validate_h0, Error};

use crate::config::Resolved;
use crate::manifest::OutputDir;
use crate::UsageError;

pub enum Failure {
    Usage(String),
    Core(Error),
    Io(std::io::Error),
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

/// Exit status for a core error.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::AtTime { source, .. } => exit_code_for(source),
        Error::SpeedBelowMinimal { .. }
        | Error::WindowViolation(_)
        | Error::CertificateFailed { .. }
        | Error::EtaUndefined { .. } => 2,
        Error::InvalidParameter(_) | Error::NotPowerFamily => 64,
        _ => 1,
    }
}

/// Result of a command that ran to completion.
pub struct Outcome {
    pub passed: bool,
    /// Exit status when `passed` is false.
    pub fail_code: i32,
    pub metrics: Value,
}

fn to_value<T: Serialize>(r: Result<T, Error>) -> Value {
    match r {
        Ok(v) => serde_json::to_value(v).unwrap_or(Value::Null),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::Array(_) => {
            let _ = writeln!(out, "{prefix} = {v}");
        }
        other => {
            let _ = writeln!(out, "{prefix} = {other}");
        }
    }
}

pub fn analyze(cfg: &Resolved, out: &mut OutputDir) -> Result<Outcome, Failure> {
    let p = cfg.params()?;
    let c_min = 2.0 * p.a.sqrt();
    let c = match &cfg.raw.c {
        Some(spec) => cfg.speed(spec, "c", &p)?,
        None => c_min,
    };
    let mut j = json!({
        "a": p.a,
        "b": p.b,
        "motility": p.motility,
        "c": c,
        "c_min": c_min,
        "carrying_capacity": p.carrying_capacity(),
    });
    let mut v_max = p.carrying_capacity();
    if let Ok(m) = p.require_power() {
        let bs = b_star(m, p.a);
        j["b_star"] = json!(bs);
        j["c_star"] = json!(c_star(p.a, p.b, m));
        j["kappa"] = json!(kappa(m, p.a));
        j["window_nonempty"] = json!(p.b >= bs);
        let e = eta(p.a, p.b, m, c);
        if let Ok(e) = e {
            v_max = v_max.max(2.0 * e);
        }
        j["eta"] = to_value(e);
    }
    j["speed_window"] = to_value(speed_window(&p, c));
    j["hypothesis"] = to_value(validate_h0(&p.motility, v_max).map(|r| {
        json!({ "v_max": v_max, "passed": r.passed(), "report": r })
    }));
    j["oscillation"] = to_value(oscillation_condition(&p));
    j["linearization_origin"] = to_value(linearize(&p, c, Equilibrium::Origin));
    j["linearization_coexistence"] = to_value(linearize(&p, c, Equilibrium::Coexistence));
    out.write_json("analysis.json", &j)?;
    let mut txt = String::new();
    flatten("", &j, &mut txt);
    out.write("analysis.txt", txt.as_bytes())?;

    let metrics = json!({
        "b_star": j.get("b_star"),
        "c_star": j.get("c_star"),
        "kappa": j.get("kappa"),
        "oscillation_holds": j["oscillation"].get("holds"),
    });
    Ok(Outcome {
        passed: true,
        fail_code: 0,
        metrics,
    })
}

fn speed_of(cfg: &Resolved, p: &wavemotil_core::ModelParams) -> Result<f64, UsageError> {
    let spec = cfg.raw.c.as_ref().ok_or_else(|| UsageError("missing key `c`".into()))?;
    cfg.speed(spec, "c", p)
}

pub fn certify(cfg: &Resolved, out: &mut OutputDir) -> Result<Outcome, Failure> {
    let p = cfg.params()?;
    let c = speed_of(cfg, &p)?;
    let (n, opts) = cfg.certify_options()?;
    let report = certify_pair_with(&p, c, n, &opts)?;
    out.write_json("certificate.json", &report)?;
    out.write("certificate.txt", report.to_key_value().as_bytes())?;
    let first = report.first_failure().map(|f| serde_json::to_value(f).unwrap_or(Value::Null));
    Ok(Outcome {
        passed: report.passed,
        fail_code: 2,
        metrics: json!({ "c": c, "n": n, "passed": report.passed, "first_failure": first }),
    })
}

pub fn wave(cfg: &Resolved, out: &mut OutputDir) -> Result<Outcome, Failure> {
    let p = cfg.params()?;
    let c = speed_of(cfg, &p)?;
    let (wopts, vopts) = cfg.wave_options()?;
    let profile = traveling_wave(&p, c, &wopts)?;
    let report = verify_profile(&profile, &p, &vopts);
    let z: Vec<f64> = (0..profile.grid.n).map(|i| profile.grid.x(i)).collect();
    let (lo, hi) = MetricsOptions::default().decay_window;
    let decay = decay_fit(&z, &profile.u, lo, hi);
    out.write("profile.csv", profile.to_csv().as_bytes())?;
    let decay_json = to_value(decay.clone());
    out.write_json(
        "profile.json",
        &json!({
            "profile": profile.sidecar(),
            "options": wopts,
            "verification": report,
            "decay_fit": decay_json,
        }),
    )?;
    Ok(Outcome {
        passed: report.passed,
        fail_code: 1,
        metrics: json!({
            "c": c,
            "lambda": profile.lambda,
            "lambda_fit": decay.ok().map(|d| d.lambda),
            "residual_L": profile.residual_l,
            "residual_V": profile.residual_v,
            "verified": report.passed,
        }),
    })
}

#[derive(Serialize)]
struct Expectation {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn label_name(l: ProfileLabel) -> &'static str {
    match l {
        ProfileLabel::Monotone => "monotone",
        ProfileLabel::OscillatoryTrailingEdge => "oscillatory",
        ProfileLabel::Indeterminate => "indeterminate",
    }
}

fn snapshot_csv(tr: &Trajectory, k: usize) -> String {
    let s = &tr.snapshots[k];
    let mut text = String::new();
    if tr.ny <= 1 {
        text.push_str("x,u,v\n");
        for i in 0..s.u.len() {
            let x = tr.origin.0 + i as f64 * tr.h;
            let _ = writeln!(text, "{x:?},{:?},{:?}", s.u[i], s.v[i]);
        }
    } else {
        text.push_str("x,y,u,v\n");
        for idx in 0..s.u.len() {
            let x = tr.origin.0 + (idx % tr.nx) as f64 * tr.h;
            let y = tr.origin.1 + (idx / tr.nx) as f64 * tr.h;
            let _ = writeln!(text, "{x:?},{y:?},{:?},{:?}", s.u[idx], s.v[idx]);
        }
    }
    text
}

pub fn simulate(cfg: &Resolved, out: &mut OutputDir) -> Result<Outcome, Failure> {
    let p = cfg.params()?;
    let sim = cfg.sim_config(&p, None)?;
    let mopts = cfg.metrics_options()?;
    let label = cfg.expected_label()?;
    let expect_speed = match &cfg.raw.expect_speed {
        Some(spec) => Some(cfg.speed(spec, "expect_speed", &p)?),
        None => None,
    };
    let stride = cfg.raw.snapshot_stride.unwrap_or(1).max(1);

    let tr = run_simulation(&sim)?;
    let metrics = trajectory_metrics(&tr, &mopts);

    let count = tr.snapshots.len();
    for k in (0..count).filter(|k| k.is_multiple_of(stride) || *k + 1 == count) {
        out.write(&format!("snapshots/snap_{k:04}.csv"), snapshot_csv(&tr, k).as_bytes())?;
    }
    let mut series = String::from("t,front,mass_u,mass_v,source_u,source_v\n");
    for (s, src) in tr.snapshots.iter().zip(&tr.sources) {
        let front = s.front.map_or("nan".to_string(), |f| format!("{f:?}"));
        let _ = writeln!(
            series,
            "{:?},{front},{:?},{:?},{:?},{:?}",
            s.t, s.mass_u, s.mass_v, src.0, src.1
        );
    }
    out.write("series.csv", series.as_bytes())?;

    let mut expectations = Vec::new();
    if let Some(want) = label {
        let persist = cfg.raw.expect_persist.unwrap_or(1).max(1);
        let tail = &metrics.snapshots[count.saturating_sub(persist)..];
        let got: Vec<&str> = tail
            .iter()
            .map(|s| s.class.map_or("none", |c| label_name(c.label)))
            .collect();
        expectations.push(Expectation {
            name: "label",
            passed: got.len() == persist && got.iter().all(|g| *g == label_name(want)),
            detail: format!("want {} over last {persist}, got {got:?}", label_name(want)),
        });
    }
    if let Some(target) = expect_speed {
        let rtol = cfg.raw.speed_rtol.unwrap_or(0.05);
        let (passed, detail) = match &metrics.speed {
            Some(fit) => {
                let rel = (fit.c_est - target).abs() / target;
                (rel <= rtol, format!("c_est {:?} vs {target:?}, rel {rel:.3e} (rtol {rtol})", fit.c_est))
            }
            None => (false, metrics.speed_error.clone().unwrap_or_default()),
        };
        expectations.push(Expectation {
            name: "speed",
            passed,
            detail,
        });
    }
    if let Some(n) = cfg.raw.expect_ring_growth {
        expectations.push(Expectation {
            name: "ring_growth",
            passed: metrics.ring_growth_run >= n,
            detail: format!("increasing run {} (need {n})", metrics.ring_growth_run),
        });
    }
    let passed = expectations.iter().all(|e| e.passed);

    out.write_json("metrics.json", &json!({ "metrics": metrics, "expectations": expectations }))?;
    let dt_min = tr.dt_history.iter().copied().fold(f64::INFINITY, f64::min);
    let dt_max = tr.dt_history.iter().copied().fold(0.0, f64::max);
    out.write_json(
        "simulation.json",
        &json!({
            "config": tr.config,
            "nx": tr.nx,
            "ny": tr.ny,
            "h": tr.h,
            "origin": tr.origin,
            "steps": tr.dt_history.len(),
            "dt_min": dt_min,
            "dt_max": dt_max,
            "dt_history": tr.dt_history,
            "sources": tr.sources,
        }),
    )?;
    let first = &tr.snapshots[0];
    let last = tr.last();
    Ok(Outcome {
        passed,
        fail_code: 1,
        metrics: json!({
            "t_end": last.t,
            "steps": tr.dt_history.len(),
            "c_est": metrics.speed.as_ref().map(|f| f.c_est),
            "final_label": metrics.final_class.map(|c| label_name(c.label)),
            "ring_growth_run": metrics.ring_growth_run,
            "mass_u": [first.mass_u, last.mass_u],
            "mass_v": [first.mass_v, last.mass_v],
            "expectations": expectations,
        }),
    })
}

#[derive(Serialize)]
struct ScanRow {
    lambda0: f64,
    c_pred: f64,
    c_est: Option<f64>,
    rel_err: Option<f64>,
    error: Option<String>,
}

fn opt_num(x: Option<f64>) -> String {
    x.map_or("nan".to_string(), |v| format!("{v:?}"))
}

pub fn speedscan(cfg: &Resolved, out: &mut OutputDir) -> Result<Outcome, Failure> {
    let p = cfg.params()?;
    let lambdas = cfg.raw.lambda0.clone().unwrap_or_default();
    if lambdas.is_empty() {
        return Err(Failure::Usage("key `lambda0` must list at least one rate".into()));
    }
    if let Some(bad) = lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Failure::Usage(format!("key `lambda0`: rate {bad} must be positive")));
    }
    let threshold = cfg.edge_threshold()?;
    let fit = cfg.metrics_options()?.fit;
    let rtol = cfg.raw.speed_rtol.unwrap_or(0.05);
    let configs = lambdas
        .iter()
        .map(|l| cfg.sim_config(&p, Some(*l)))
        .collect::<Result<Vec<_>, _>>()?;
    let gamma0 = p.motility.gamma(0.0);

    let rows: Vec<ScanRow> = lambdas
        .par_iter()
        .zip(configs.par_iter())
        .map(|(&l0, sim)| {
            let c_pred = leading_edge_speed_with(l0, p.a, gamma0, threshold);
            let est = run_simulation(sim).and_then(|tr| {
                let (t, x) = tr.front_series();
                wave_speed(&t, &x, &fit)
            });
            match est {
                Ok(f) => ScanRow {
                    lambda0: l0,
                    c_pred,
                    c_est: Some(f.c_est),
                    rel_err: Some((f.c_est - c_pred).abs() / c_pred),
                    error: None,
                },
                Err(e) => ScanRow {
                    lambda0: l0,
                    c_pred,
                    c_est: None,
                    rel_err: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let mut csv = String::from("lambda0,c_pred,c_est,rel_err\n");
    for r in &rows {
        let _ = writeln!(csv, "{:?},{:?},{},{}", r.lambda0, r.c_pred, opt_num(r.c_est), opt_num(r.rel_err));
    }
    out.write("speedscan.csv", csv.as_bytes())?;
    let passed = rows.iter().all(|r| r.rel_err.is_some_and(|e| e <= rtol));
    let worst = rows.iter().filter_map(|r| r.rel_err).fold(0.0, f64::max);
    Ok(Outcome {
        passed,
        fail_code: 1,
        metrics: json!({ "rows": rows, "max_rel_err": worst, "speed_rtol": rtol }),
    })
}

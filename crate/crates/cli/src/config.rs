//! Flat key-value configuration: built-in defaults, then a preset, then the user file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use wavemotil_core::analysis::{c_star, EdgeThreshold};
use wavemotil_core::certificates::CertifyOptions;
use wavemotil_core::frontmetrics::{
    ClassifyOptions, MetricsOptions, ProfileLabel, RingLevel, RingOptions, SpeedFitOptions,
};
use wavemotil_core::pde::{self, Boundary, Geometry, InitialCondition, SchemeOptions, Sides, SimConfig};
use wavemotil_core::waveode::{VerifyOptions, WaveOptions};
use wavemotil_core::{ModelParams, MotilityFamily};

use crate::UsageError;

/// A speed given as a number or as `min`, `mid`, `max` of the admissible window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpeedSpec {
    Value(f64),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LevelSpec {
    Value(f64),
    /// `half_height`
    Named(String),
}

/// Every recognised key. Unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// `power`, `exponential` or `sigmoid`.
    pub family: Option<String>,
    pub m: Option<f64>,
    pub chi: Option<f64>,
    pub eps: Option<f64>,
    pub v0: Option<f64>,
    pub c: Option<SpeedSpec>,

    pub n: Option<u32>,
    pub grid_points: Option<usize>,
    pub v_samples: Option<usize>,
    pub delta_start: Option<f64>,
    pub delta_floor: Option<f64>,

    pub wave_h: Option<f64>,
    pub left_efolds: Option<f64>,
    pub right_efolds: Option<f64>,
    pub tol_limit: Option<f64>,
    pub dt_check: Option<f64>,
    pub t_max: Option<f64>,
    pub picard_tol: Option<f64>,
    pub picard_max: Option<usize>,
    pub residual_tol: Option<f64>,
    pub limit_rtol: Option<f64>,
    pub slope_rtol: Option<f64>,

    pub dim: Option<usize>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub y_min: Option<f64>,
    pub y_max: Option<f64>,
    pub h: Option<f64>,
    pub disk_radius: Option<f64>,
    /// `neumann`, `dirichlet_initial` or `dirichlet:U,V`.
    pub bc_left: Option<String>,
    pub bc_right: Option<String>,
    pub bc_bottom: Option<String>,
    pub bc_top: Option<String>,
    /// `front`, `bump2d` or `file`.
    pub ic: Option<String>,
    pub ic_k: Option<f64>,
    pub ic_x0: Option<f64>,
    pub ic_amplitude: Option<f64>,
    pub ic_base: Option<f64>,
    pub ic_file: Option<String>,
    pub t_end: Option<f64>,
    pub cadence: Option<f64>,
    pub cfl: Option<f64>,
    pub dt_max: Option<f64>,
    pub reaction_dt: Option<f64>,
    pub cg_tol: Option<f64>,
    pub snapshot_stride: Option<usize>,

    pub fit_skip: Option<f64>,
    pub min_samples: Option<usize>,
    pub monotone_overshoot: Option<f64>,
    pub oscillatory_overshoot: Option<f64>,
    pub oscillatory_crossings: Option<usize>,
    pub ring_level: Option<LevelSpec>,
    pub ring_max_radius: Option<f64>,
    pub ring_rays: Option<usize>,

    /// `monotone`, `oscillatory` or `indeterminate`.
    pub expect_label: Option<String>,
    /// Number of final snapshots that must carry `expect_label`.
    pub expect_persist: Option<usize>,
    pub expect_speed: Option<SpeedSpec>,
    pub speed_rtol: Option<f64>,
    pub expect_ring_growth: Option<usize>,

    pub lambda0: Option<Vec<f64>>,
    /// `literal` or `minimizer`.
    pub edge_threshold: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Certify,
    Wave,
    Simulate,
    Speedscan,
}

fn put(t: &mut Table, key: &str, v: impl Into<Value>) {
    t.entry(key.to_string()).or_insert(v.into());
}

/// Preset values as a config table; `None` for unknown names.
pub fn preset_table(name: &str) -> Option<Table> {
    let cfg = pde::preset(name)?;
    let mut t = sim_to_table(&cfg);
    match name {
        "fig2" => {
            t.insert("expect_label".into(), "monotone".into());
            t.insert("expect_speed".into(), "min".into());
            t.insert("speed_rtol".into(), 0.05.into());
        }
        "fig3" => {
            t.insert("expect_label".into(), "oscillatory".into());
            t.insert("expect_persist".into(), 3.into());
        }
        "fig4" => {
            t.insert("expect_ring_growth".into(), 5.into());
        }
        _ => {}
    }
    Some(t)
}

fn bc_string(b: &Boundary) -> String {
    match b {
        Boundary::Neumann => "neumann".into(),
        Boundary::DirichletInitial => "dirichlet_initial".into(),
        Boundary::Dirichlet { u, v } => format!("dirichlet:{u:?},{v:?}"),
    }
}

fn sim_to_table(cfg: &SimConfig) -> Table {
    let mut t = Table::new();
    let p = &cfg.params;
    t.insert("a".into(), p.a.into());
    t.insert("b".into(), p.b.into());
    match p.motility {
        MotilityFamily::Power { m } => {
            t.insert("family".into(), "power".into());
            t.insert("m".into(), m.into());
        }
        MotilityFamily::Exponential { chi } => {
            t.insert("family".into(), "exponential".into());
            t.insert("chi".into(), chi.into());
        }
        MotilityFamily::Sigmoid { eps, v0 } => {
            t.insert("family".into(), "sigmoid".into());
            t.insert("eps".into(), eps.into());
            t.insert("v0".into(), v0.into());
        }
    }
    match cfg.geometry {
        Geometry::Line { x_min, x_max, h } => {
            t.insert("dim".into(), 1.into());
            t.insert("x_min".into(), x_min.into());
            t.insert("x_max".into(), x_max.into());
            t.insert("h".into(), h.into());
        }
        Geometry::Rect {
            x_min,
            x_max,
            y_min,
            y_max,
            h,
            disk,
        } => {
            t.insert("dim".into(), 2.into());
            t.insert("x_min".into(), x_min.into());
            t.insert("x_max".into(), x_max.into());
            t.insert("y_min".into(), y_min.into());
            t.insert("y_max".into(), y_max.into());
            t.insert("h".into(), h.into());
            if let Some(r) = disk {
                t.insert("disk_radius".into(), r.into());
            }
            t.insert("bc_bottom".into(), bc_string(&cfg.bc.bottom).into());
            t.insert("bc_top".into(), bc_string(&cfg.bc.top).into());
        }
    }
    t.insert("bc_left".into(), bc_string(&cfg.bc.left).into());
    t.insert("bc_right".into(), bc_string(&cfg.bc.right).into());
    match &cfg.initial {
        InitialCondition::Front { k, x0, amplitude } => {
            t.insert("ic".into(), "front".into());
            t.insert("ic_k".into(), (*k).into());
            t.insert("ic_x0".into(), (*x0).into());
            t.insert("ic_amplitude".into(), (*amplitude).into());
        }
        InitialCondition::Bump2d { base, amplitude } => {
            t.insert("ic".into(), "bump2d".into());
            t.insert("ic_base".into(), (*base).into());
            t.insert("ic_amplitude".into(), (*amplitude).into());
        }
        InitialCondition::Custom { .. } => {}
    }
    t.insert("t_end".into(), cfg.t_end.into());
    t.insert("cadence".into(), cfg.cadence.into());
    t
}

fn model_defaults(t: &mut Table) {
    put(t, "family", "power");
}

fn certify_defaults(t: &mut Table) {
    let o = CertifyOptions::default();
    put(t, "c", "min");
    put(t, "n", 2);
    put(t, "grid_points", o.grid_points as i64);
    put(t, "v_samples", o.v_samples as i64);
    put(t, "delta_start", o.delta_start);
    put(t, "delta_floor", o.delta_floor);
}

fn wave_defaults(t: &mut Table) {
    let o = WaveOptions::default();
    let v = VerifyOptions::default();
    put(t, "c", "min");
    put(t, "n", i64::from(o.n));
    put(t, "wave_h", o.h);
    put(t, "left_efolds", o.left_efolds);
    put(t, "right_efolds", o.right_efolds);
    put(t, "tol_limit", o.tol_limit);
    put(t, "dt_check", o.dt_check);
    put(t, "t_max", o.t_max);
    put(t, "picard_tol", o.picard_tol);
    put(t, "picard_max", o.picard_max as i64);
    put(t, "residual_tol", v.residual_tol);
    put(t, "limit_rtol", v.limit_rtol);
    put(t, "slope_rtol", v.slope_rtol);
}

fn simulate_defaults(t: &mut Table, speedscan: bool) {
    put(t, "dim", 1);
    let dim = t.get("dim").and_then(Value::as_integer).unwrap_or(1);
    let s = SchemeOptions::default();
    let c = ClassifyOptions::default();
    if dim == 2 {
        put(t, "x_min", -10.0);
        put(t, "x_max", 10.0);
        put(t, "y_min", -10.0);
        put(t, "y_max", 10.0);
        put(t, "h", 0.1);
        for side in ["bc_left", "bc_right", "bc_bottom", "bc_top"] {
            put(t, side, "neumann");
        }
        put(t, "ic", "bump2d");
        put(t, "ic_base", 4.0);
        put(t, "ic_amplitude", 1.0);
        put(t, "t_end", 20.0);
        put(t, "cadence", 2.0);
        put(t, "snapshot_stride", 1);
        put(t, "ring_level", "half_height");
        put(t, "ring_max_radius", 9.0);
        put(t, "ring_rays", 64);
    } else {
        put(t, "x_min", 0.0);
        put(t, "x_max", if speedscan { 400.0 } else { 200.0 });
        put(t, "h", 0.05);
        put(t, "bc_left", "dirichlet_initial");
        put(t, "bc_right", "dirichlet_initial");
        put(t, "ic", "front");
        if !speedscan {
            put(t, "ic_k", 2.0);
        }
        put(t, "ic_x0", 20.0);
        put(t, "ic_amplitude", 1.0);
        put(t, "t_end", if speedscan { 60.0 } else { 100.0 });
        put(t, "cadence", if speedscan { 0.5 } else { 1.0 });
        put(t, "snapshot_stride", 10);
        put(t, "fit_skip", 0.5);
        put(t, "min_samples", 10);
        put(t, "monotone_overshoot", c.monotone_overshoot);
        put(t, "oscillatory_overshoot", c.oscillatory_overshoot);
        put(t, "oscillatory_crossings", c.oscillatory_crossings as i64);
    }
    put(t, "cfl", s.cfl);
    put(t, "dt_max", s.dt_max);
    put(t, "reaction_dt", s.reaction_dt);
    put(t, "cg_tol", s.cg_tol);
    if speedscan {
        put(t, "speed_rtol", 0.05);
        put(t, "edge_threshold", "literal");
    }
}

/// Merged and defaulted configuration together with its TOML echo.
pub struct Resolved {
    pub raw: RawConfig,
    pub table: Table,
    /// Directory that relative paths in the config refer to.
    pub base_dir: PathBuf,
}

/// Layers defaults, the preset and the file (later wins) for `command`.
pub fn resolve(command: Command, preset: Option<&str>, file: Option<&Path>) -> Result<Resolved, UsageError> {
    let mut table = Table::new();
    if let Some(name) = preset {
        let p = preset_table(name)
            .ok_or_else(|| UsageError(format!("unknown preset `{name}` (expected fig2, fig3 or fig4)")))?;
        table.extend(p);
    }
    let mut base_dir = PathBuf::from(".");
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        let user: Table = text
            .parse()
            .map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
        // reject unknown keys and type errors with the file's own diagnostics
        toml::from_str::<RawConfig>(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
        table.extend(user);
        if let Some(parent) = path.parent() {
            base_dir = parent.to_path_buf();
        }
    }
    model_defaults(&mut table);
    match command {
        Command::Analyze => {}
        Command::Certify => certify_defaults(&mut table),
        Command::Wave => wave_defaults(&mut table),
        Command::Simulate => simulate_defaults(&mut table, false),
        Command::Speedscan => simulate_defaults(&mut table, true),
    }
    let raw: RawConfig = Value::Table(table.clone())
        .try_into()
        .map_err(|e: toml::de::Error| UsageError(e.to_string()))?;
    Ok(Resolved {
        raw,
        table,
        base_dir,
    })
}

fn need<T: Copy>(v: Option<T>, key: &str) -> Result<T, UsageError> {
    v.ok_or_else(|| UsageError(format!("missing key `{key}`")))
}

impl Resolved {
    pub fn echo(&self) -> String {
        toml::to_string(&self.table).expect("table serializes")
    }

    pub fn params(&self) -> Result<ModelParams, UsageError> {
        let r = &self.raw;
        let a = need(r.a, "a")?;
        let b = need(r.b, "b")?;
        let family = match r.family.as_deref().unwrap_or("power") {
            "power" => MotilityFamily::Power { m: need(r.m, "m")? },
            "exponential" => MotilityFamily::Exponential {
                chi: need(r.chi, "chi")?,
            },
            "sigmoid" => MotilityFamily::Sigmoid {
                eps: need(r.eps, "eps")?,
                v0: need(r.v0, "v0")?,
            },
            other => {
                return Err(UsageError(format!(
                    "key `family`: unknown value `{other}` (expected power, exponential or sigmoid)"
                )))
            }
        };
        ModelParams::new(a, b, family).map_err(|e| UsageError(e.to_string()))
    }

    /// Resolves a speed spec against the window `[2 sqrt a, c*]`.
    pub fn speed(&self, spec: &SpeedSpec, key: &str, params: &ModelParams) -> Result<f64, UsageError> {
        let c_min = 2.0 * params.a.sqrt();
        let c_max = || -> Result<f64, UsageError> {
            let m = params
                .require_power()
                .map_err(|_| UsageError(format!("key `{key}`: `max`/`mid` need the power family")))?;
            Ok(c_star(params.a, params.b, m))
        };
        match spec {
            SpeedSpec::Value(c) => Ok(*c),
            SpeedSpec::Named(s) => match s.as_str() {
                "min" => Ok(c_min),
                "max" => c_max(),
                "mid" => Ok(0.5 * (c_min + c_max()?)),
                other => Err(UsageError(format!(
                    "key `{key}`: unknown value `{other}` (expected a number, min, mid or max)"
                ))),
            },
        }
    }

    pub fn certify_options(&self) -> Result<(u32, CertifyOptions), UsageError> {
        let r = &self.raw;
        Ok((
            need(r.n, "n")?,
            CertifyOptions {
                grid_points: need(r.grid_points, "grid_points")?,
                delta_start: need(r.delta_start, "delta_start")?,
                delta_floor: need(r.delta_floor, "delta_floor")?,
                v_samples: need(r.v_samples, "v_samples")?,
            },
        ))
    }

    pub fn wave_options(&self) -> Result<(WaveOptions, VerifyOptions), UsageError> {
        let r = &self.raw;
        Ok((
            WaveOptions {
                h: need(r.wave_h, "wave_h")?,
                left_efolds: need(r.left_efolds, "left_efolds")?,
                right_efolds: need(r.right_efolds, "right_efolds")?,
                tol_limit: need(r.tol_limit, "tol_limit")?,
                dt_check: need(r.dt_check, "dt_check")?,
                t_max: need(r.t_max, "t_max")?,
                picard_tol: need(r.picard_tol, "picard_tol")?,
                picard_max: need(r.picard_max, "picard_max")?,
                n: need(r.n, "n")?,
                ..WaveOptions::default()
            },
            VerifyOptions {
                residual_tol: need(r.residual_tol, "residual_tol")?,
                limit_rtol: need(r.limit_rtol, "limit_rtol")?,
                slope_rtol: need(r.slope_rtol, "slope_rtol")?,
            },
        ))
    }

    fn boundary(&self, value: Option<&String>, key: &str) -> Result<Boundary, UsageError> {
        let s = value.ok_or_else(|| UsageError(format!("missing key `{key}`")))?;
        match s.as_str() {
            "neumann" => Ok(Boundary::Neumann),
            "dirichlet_initial" => Ok(Boundary::DirichletInitial),
            other => {
                let bad = || {
                    UsageError(format!(
                        "key `{key}`: `{other}` is not neumann, dirichlet_initial or dirichlet:U,V"
                    ))
                };
                let rest = other.strip_prefix("dirichlet:").ok_or_else(bad)?;
                let (u, v) = rest.split_once(',').ok_or_else(bad)?;
                Ok(Boundary::Dirichlet {
                    u: u.trim().parse().map_err(|_| bad())?,
                    v: v.trim().parse().map_err(|_| bad())?,
                })
            }
        }
    }

    /// Simulation config; speedscan rows override `ic_k`.
    pub fn sim_config(&self, params: &ModelParams, ic_k: Option<f64>) -> Result<SimConfig, UsageError> {
        let r = &self.raw;
        let dim = need(r.dim, "dim")?;
        let h = need(r.h, "h")?;
        let (geometry, bc) = match dim {
            1 => {
                let geometry = Geometry::Line {
                    x_min: need(r.x_min, "x_min")?,
                    x_max: need(r.x_max, "x_max")?,
                    h,
                };
                let left = self.boundary(r.bc_left.as_ref(), "bc_left")?;
                let right = self.boundary(r.bc_right.as_ref(), "bc_right")?;
                (
                    geometry,
                    Sides {
                        left,
                        right,
                        bottom: Boundary::Neumann,
                        top: Boundary::Neumann,
                    },
                )
            }
            2 => (
                Geometry::Rect {
                    x_min: need(r.x_min, "x_min")?,
                    x_max: need(r.x_max, "x_max")?,
                    y_min: need(r.y_min, "y_min")?,
                    y_max: need(r.y_max, "y_max")?,
                    h,
                    disk: r.disk_radius,
                },
                Sides {
                    left: self.boundary(r.bc_left.as_ref(), "bc_left")?,
                    right: self.boundary(r.bc_right.as_ref(), "bc_right")?,
                    bottom: self.boundary(r.bc_bottom.as_ref(), "bc_bottom")?,
                    top: self.boundary(r.bc_top.as_ref(), "bc_top")?,
                },
            ),
            d => return Err(UsageError(format!("key `dim`: {d} is not 1 or 2"))),
        };
        let initial = match need(r.ic.as_deref(), "ic")? {
            "front" => InitialCondition::Front {
                k: match ic_k {
                    Some(k) => k,
                    None => need(r.ic_k, "ic_k")?,
                },
                x0: need(r.ic_x0, "ic_x0")?,
                amplitude: need(r.ic_amplitude, "ic_amplitude")?,
            },
            "bump2d" => InitialCondition::Bump2d {
                base: need(r.ic_base, "ic_base")?,
                amplitude: need(r.ic_amplitude, "ic_amplitude")?,
            },
            "file" => {
                let path = self.base_dir.join(need(r.ic_file.as_deref(), "ic_file")?);
                let (u, v) = read_initial_csv(&path)?;
                InitialCondition::Custom { u, v }
            }
            other => {
                return Err(UsageError(format!(
                    "key `ic`: unknown value `{other}` (expected front, bump2d or file)"
                )))
            }
        };
        let cfg = SimConfig {
            params: *params,
            geometry,
            bc,
            initial,
            t_end: need(r.t_end, "t_end")?,
            cadence: need(r.cadence, "cadence")?,
            scheme: SchemeOptions {
                cfl: need(r.cfl, "cfl")?,
                dt_max: need(r.dt_max, "dt_max")?,
                reaction_dt: need(r.reaction_dt, "reaction_dt")?,
                cg_tol: need(r.cg_tol, "cg_tol")?,
                ..SchemeOptions::default()
            },
        };
        cfg.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(cfg)
    }

    pub fn metrics_options(&self) -> Result<MetricsOptions, UsageError> {
        let r = &self.raw;
        let d = MetricsOptions::default();
        let ring_level = match &r.ring_level {
            None => RingLevel::HalfHeight,
            Some(LevelSpec::Value(l)) => RingLevel::Fixed(*l),
            Some(LevelSpec::Named(s)) if s == "half_height" => RingLevel::HalfHeight,
            Some(LevelSpec::Named(s)) => {
                return Err(UsageError(format!(
                    "key `ring_level`: unknown value `{s}` (expected a number or half_height)"
                )))
            }
        };
        Ok(MetricsOptions {
            fit: SpeedFitOptions {
                skip_fraction: r.fit_skip.unwrap_or(d.fit.skip_fraction),
                min_samples: r.min_samples.unwrap_or(d.fit.min_samples),
            },
            classify: ClassifyOptions {
                monotone_overshoot: r.monotone_overshoot.unwrap_or(d.classify.monotone_overshoot),
                oscillatory_overshoot: r.oscillatory_overshoot.unwrap_or(d.classify.oscillatory_overshoot),
                oscillatory_crossings: r.oscillatory_crossings.unwrap_or(d.classify.oscillatory_crossings),
                ..d.classify
            },
            ring: RingOptions {
                rays: r.ring_rays.unwrap_or(d.ring.rays),
                max_radius: r.ring_max_radius.unwrap_or(d.ring.max_radius),
                dr: None,
            },
            ring_level,
            ..d
        })
    }

    pub fn expected_label(&self) -> Result<Option<ProfileLabel>, UsageError> {
        Ok(match self.raw.expect_label.as_deref() {
            None => None,
            Some("monotone") => Some(ProfileLabel::Monotone),
            Some("oscillatory") => Some(ProfileLabel::OscillatoryTrailingEdge),
            Some("indeterminate") => Some(ProfileLabel::Indeterminate),
            Some(other) => {
                return Err(UsageError(format!(
                    "key `expect_label`: unknown value `{other}` (expected monotone, oscillatory or indeterminate)"
                )))
            }
        })
    }

    pub fn edge_threshold(&self) -> Result<EdgeThreshold, UsageError> {
        match self.raw.edge_threshold.as_deref().unwrap_or("literal") {
            "literal" => Ok(EdgeThreshold::Literal),
            "minimizer" => Ok(EdgeThreshold::Minimizer),
            other => Err(UsageError(format!(
                "key `edge_threshold`: unknown value `{other}` (expected literal or minimizer)"
            ))),
        }
    }
}

/// Two-column `u,v` CSV with a header, one row per node.
fn read_initial_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>), UsageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read ic_file {}: {e}", path.display())))?;
    let mut u = Vec::new();
    let mut v = Vec::new();
    for (line_no, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',').map(str::trim);
        let parse = |s: Option<&str>| -> Result<f64, UsageError> {
            s.and_then(|s| s.parse().ok()).ok_or_else(|| {
                UsageError(format!("{}: line {}: expected `u,v`", path.display(), line_no + 1))
            })
        };
        u.push(parse(parts.next())?);
        v.push(parse(parts.next())?);
    }
    Ok((u, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip_to_core() {
        for name in ["fig2", "fig3", "fig4"] {
            let r = resolve(Command::Simulate, Some(name), None).unwrap();
            let p = r.params().unwrap();
            let cfg = r.sim_config(&p, None).unwrap();
            let mut want = pde::preset(name).unwrap();
            if want.geometry.dim() == 1 {
                // y sides are unused on a line
                want.bc.bottom = Boundary::Neumann;
                want.bc.top = Boundary::Neumann;
            }
            assert_eq!(cfg, want, "{name}");
        }
    }

    #[test]
    fn unknown_preset_is_usage_error() {
        assert!(resolve(Command::Simulate, Some("fig9"), None).is_err());
    }

    #[test]
    fn speed_names() {
        let mut r = resolve(Command::Wave, Some("fig2"), None).unwrap();
        r.raw.b = Some(60.0);
        let p = ModelParams::power(0.1, 60.0, 6.0).unwrap();
        let min = r.speed(&SpeedSpec::Named("min".into()), "c", &p).unwrap();
        assert!((min - 2.0 * 0.1f64.sqrt()).abs() < 1e-15);
        let max = r.speed(&SpeedSpec::Named("max".into()), "c", &p).unwrap();
        assert!(max > min);
        assert!(r.speed(&SpeedSpec::Named("fast".into()), "c", &p).is_err());
    }
}

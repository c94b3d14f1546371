//! Time-dependent solver for the full system on 1-D intervals and 2-D rectangles.
//!
//! Nodes sit on a uniform grid including the boundary. Each node owns a control
//! volume (half or quarter cells on the box boundary), so zero-flux boundaries
//! conserve the weighted sums exactly. A step is Strang split: half a reaction
//! step (RK4 on `u(a-bu)` and `u-v`), one transport step, half a reaction step.
//! Transport treats both Laplacians implicitly and the cross-diffusion flux
//! explicitly with a limited upwind reconstruction of `u`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontmetrics::front_position;
use crate::grid::solve_tridiagonal;
use crate::model::{ModelParams, MotilityFamily};

/// Values below this are clipped to zero; anything lower is an error.
pub const NEGATIVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Boundary {
    Neumann,
    Dirichlet { u: f64, v: f64 },
    /// Dirichlet with the initial values at the boundary nodes.
    DirichletInitial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sides {
    pub left: Boundary,
    pub right: Boundary,
    pub bottom: Boundary,
    pub top: Boundary,
}

impl Sides {
    pub fn all(b: Boundary) -> Self {
        Self {
            left: b,
            right: b,
            bottom: b,
            top: b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    Line {
        x_min: f64,
        x_max: f64,
        h: f64,
    },
    Rect {
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        h: f64,
        /// Restrict to the disk of this radius about the box center (staircase, zero flux).
        disk: Option<f64>,
    },
}

impl Geometry {
    pub fn dim(&self) -> usize {
        match self {
            Geometry::Line { .. } => 1,
            Geometry::Rect { .. } => 2,
        }
    }

    fn nodes(lo: f64, hi: f64, h: f64) -> Result<usize> {
        if !(h > 0.0) || !(hi > lo) {
            return Err(Error::InvalidParameter(format!("extent [{lo}, {hi}] with h = {h}")));
        }
        let n = (hi - lo) / h;
        if (n - n.round()).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "h = {h} does not divide the extent {}",
                hi - lo
            )));
        }
        let n = n.round() as usize + 1;
        if n < 3 {
            return Err(Error::InvalidParameter("fewer than 3 nodes".into()));
        }
        Ok(n)
    }
}

/// Nodal state of a simulation. Arrays are row-major with `x` fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub dim: usize,
    pub extents: Vec<f64>,
    pub origin: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub bc: Sides,
    /// Active nodes; `None` means all.
    pub mask: Option<Vec<bool>>,
}

impl GridField {
    /// A zero field on `geometry`. `DirichletInitial` sides are resolved by [`GridField::with_initial`].
    pub fn zeros(geometry: &Geometry, bc: Sides) -> Result<Self> {
        match *geometry {
            Geometry::Line { x_min, x_max, h } => {
                let nx = Geometry::nodes(x_min, x_max, h)?;
                Ok(Self {
                    dim: 1,
                    extents: vec![x_max - x_min],
                    origin: (x_min, 0.0),
                    nx,
                    ny: 1,
                    h,
                    u: vec![0.0; nx],
                    v: vec![0.0; nx],
                    bc,
                    mask: None,
                })
            }
            Geometry::Rect {
                x_min,
                x_max,
                y_min,
                y_max,
                h,
                disk,
            } => {
                let nx = Geometry::nodes(x_min, x_max, h)?;
                let ny = Geometry::nodes(y_min, y_max, h)?;
                let mask = disk.map(|r| {
                    let (cx, cy) = (0.5 * (x_min + x_max), 0.5 * (y_min + y_max));
                    (0..nx * ny)
                        .map(|k| {
                            let x = x_min + (k % nx) as f64 * h - cx;
                            let y = y_min + (k / nx) as f64 * h - cy;
                            (x * x + y * y).sqrt() <= r * (1.0 + 1e-12)
                        })
                        .collect()
                });
                Ok(Self {
                    dim: 2,
                    extents: vec![x_max - x_min, y_max - y_min],
                    origin: (x_min, y_min),
                    nx,
                    ny,
                    h,
                    u: vec![0.0; nx * ny],
                    v: vec![0.0; nx * ny],
                    bc,
                    mask,
                })
            }
        }
    }

    /// Fills `u`, `v` from `ic` and pins `DirichletInitial` sides to those values.
    pub fn with_initial(mut self, ic: &InitialCondition) -> Result<Self> {
        let n = self.len();
        match ic {
            InitialCondition::Front { k, x0, amplitude } => {
                for idx in 0..n {
                    let (x, _) = self.coords(idx);
                    let w = amplitude / (1.0 + (k * (x - x0)).exp());
                    self.u[idx] = w;
                    self.v[idx] = w;
                }
            }
            InitialCondition::Bump2d { base, amplitude } => {
                for idx in 0..n {
                    let (x, y) = self.coords(idx);
                    let w = base + amplitude * (-(x * x + y * y)).exp();
                    self.u[idx] = w;
                    self.v[idx] = w;
                }
            }
            InitialCondition::Custom { u, v } => {
                if u.len() != n || v.len() != n {
                    return Err(Error::InvalidParameter(format!(
                        "custom initial data has {} / {} values, grid has {n}",
                        u.len(),
                        v.len()
                    )));
                }
                self.u.clone_from(u);
                self.v.clone_from(v);
            }
        }
        if let Some(mask) = &self.mask {
            for (idx, &on) in mask.iter().enumerate() {
                if !on {
                    self.u[idx] = 0.0;
                    self.v[idx] = 0.0;
                }
            }
        }
        if self.u.iter().chain(&self.v).any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter("initial data must be finite and nonnegative".into()));
        }
        self.apply_dirichlet();
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coords(&self, idx: usize) -> (f64, f64) {
        let i = idx % self.nx;
        let j = idx / self.nx;
        (
            self.origin.0 + i as f64 * self.h,
            if self.dim == 2 { self.origin.1 + j as f64 * self.h } else { 0.0 },
        )
    }

    pub fn x_nodes(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.origin.0 + i as f64 * self.h).collect()
    }

    fn is_active(&self, idx: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[idx])
    }

    /// Boundary condition governing node `idx`, Dirichlet taking precedence at corners.
    fn node_boundary(&self, idx: usize) -> Option<Boundary> {
        let i = idx % self.nx;
        let j = idx / self.nx;
        let mut sides = Vec::with_capacity(2);
        if i == 0 {
            sides.push(self.bc.left);
        }
        if i + 1 == self.nx {
            sides.push(self.bc.right);
        }
        if self.dim == 2 {
            if j == 0 {
                sides.push(self.bc.bottom);
            }
            if j + 1 == self.ny {
                sides.push(self.bc.top);
            }
        }
        sides
            .iter()
            .copied()
            .find(|b| !matches!(b, Boundary::Neumann))
            .or(sides.first().copied())
    }

    fn apply_dirichlet(&mut self) {
        for idx in 0..self.len() {
            if let Some(Boundary::Dirichlet { u, v }) = self.node_boundary(idx) {
                self.u[idx] = u;
                self.v[idx] = v;
            }
        }
    }

    fn fixed_nodes(&self) -> Vec<bool> {
        (0..self.len())
            .map(|idx| {
                matches!(
                    self.node_boundary(idx),
                    Some(Boundary::Dirichlet { .. } | Boundary::DirichletInitial)
                )
            })
            .collect()
    }

    /// Control-volume weights times `h^dim`, zero on inactive nodes.
    pub fn volumes(&self) -> Vec<f64> {
        let hd = self.h.powi(self.dim as i32);
        (0..self.len())
            .map(|idx| {
                if !self.is_active(idx) {
                    return 0.0;
                }
                let i = idx % self.nx;
                let j = idx / self.nx;
                let mut w = hd;
                if i == 0 || i + 1 == self.nx {
                    w *= 0.5;
                }
                if self.dim == 2 && (j == 0 || j + 1 == self.ny) {
                    w *= 0.5;
                }
                w
            })
            .collect()
    }

    /// `(∫u, ∫v)` with the control-volume weights.
    pub fn masses(&self) -> (f64, f64) {
        let w = self.volumes();
        let mu = w.iter().zip(&self.u).map(|(a, b)| a * b).sum();
        let mv = w.iter().zip(&self.v).map(|(a, b)| a * b).sum();
        (mu, mv)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialCondition {
    /// `u0 = v0 = amplitude/(1 + e^{k(x - x0)})`.
    Front { k: f64, x0: f64, amplitude: f64 },
    /// `u0 = v0 = base + amplitude e^{-(x^2 + y^2)}`.
    Bump2d { base: f64, amplitude: f64 },
    Custom { u: Vec<f64>, v: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeOptions {
    pub cfl: f64,
    pub dt_max: f64,
    /// Largest RK4 substep for the kinetics.
    pub reaction_dt: f64,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        Self {
            cfl: 0.4,
            dt_max: 0.1,
            reaction_dt: 0.01,
            cg_tol: 1e-13,
            cg_max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: ModelParams,
    pub geometry: Geometry,
    pub bc: Sides,
    pub initial: InitialCondition,
    pub t_end: f64,
    /// Snapshot spacing in time; must divide `t_end`.
    pub cadence: f64,
    pub scheme: SchemeOptions,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0) || !(self.cadence > 0.0) {
            return Err(Error::InvalidParameter("t_end and cadence must be positive".into()));
        }
        let k = self.t_end / self.cadence;
        if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "cadence {} does not divide t_end {}",
                self.cadence, self.t_end
            )));
        }
        let s = &self.scheme;
        if !(s.cfl > 0.0 && s.cfl <= 1.0) || !(s.dt_max > 0.0) || !(s.reaction_dt > 0.0) || !(s.cg_tol > 0.0) {
            return Err(Error::InvalidParameter("scheme options out of range".into()));
        }
        Ok(())
    }

    pub fn initial_field(&self) -> Result<GridField> {
        GridField::zeros(&self.geometry, self.bc)?.with_initial(&self.initial)
    }
}

/// Per-step bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub dt: f64,
    /// Reaction contribution to `∫u` over the step, summed stage by stage.
    pub u_source: f64,
    /// Same for `∫v`: the discrete `∫(u - v)` budget.
    pub v_source: f64,
    pub solver_iterations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Face {
    i: usize,
    j: usize,
    /// Face area relative to a full interior face.
    alpha: f64,
    /// Upstream neighbours for the limited reconstruction.
    before_i: Option<usize>,
    after_j: Option<usize>,
}

/// Precomputed mesh data and scratch space for repeated steps on one grid.
pub struct Stepper {
    params: ModelParams,
    scheme: SchemeOptions,
    dim: usize,
    n: usize,
    h: f64,
    volume: Vec<f64>,
    faces: Vec<Face>,
    free: Vec<bool>,
    gamma: Vec<f64>,
    dgamma: Vec<f64>,
    coef: Vec<f64>,
    rhs: Vec<f64>,
    work: [Vec<f64>; 4],
}

impl Stepper {
    pub fn new(field: &GridField, params: &ModelParams, scheme: SchemeOptions) -> Self {
        let n = field.len();
        let (nx, ny) = (field.nx, field.ny);
        let active = |idx: usize| field.is_active(idx);
        let mut faces = Vec::new();
        let mut push = |i: usize, j: usize, alpha: f64, before: Option<usize>, after: Option<usize>| {
            if active(i) && active(j) {
                faces.push(Face {
                    i,
                    j,
                    alpha,
                    before_i: before.filter(|&k| active(k)),
                    after_j: after.filter(|&k| active(k)),
                });
            }
        };
        for jy in 0..ny {
            let edge_row = field.dim == 2 && (jy == 0 || jy + 1 == ny);
            for ix in 0..nx - 1 {
                let i = jy * nx + ix;
                push(
                    i,
                    i + 1,
                    if edge_row { 0.5 } else { 1.0 },
                    (ix > 0).then(|| i - 1),
                    (ix + 2 < nx).then(|| i + 2),
                );
            }
        }
        if field.dim == 2 {
            for jy in 0..ny - 1 {
                for ix in 0..nx {
                    let i = jy * nx + ix;
                    let edge_col = ix == 0 || ix + 1 == nx;
                    push(
                        i,
                        i + nx,
                        if edge_col { 0.5 } else { 1.0 },
                        (jy > 0).then(|| i - nx),
                        (jy + 2 < ny).then(|| i + 2 * nx),
                    );
                }
            }
        }
        let fixed = field.fixed_nodes();
        let free = (0..n).map(|k| active(k) && !fixed[k]).collect();
        Self {
            params: *params,
            scheme,
            dim: field.dim,
            n,
            h: field.h,
            volume: field.volumes(),
            faces,
            free,
            gamma: vec![0.0; n],
            dgamma: vec![0.0; n],
            coef: Vec::new(),
            rhs: vec![0.0; n],
            work: std::array::from_fn(|_| vec![0.0; n]),
        }
    }

    fn refresh_motility(&mut self, v: &[f64]) {
        for k in 0..self.n {
            let g = self.params.motility.eval_unchecked(v[k].max(0.0));
            self.gamma[k] = g.gamma;
            self.dgamma[k] = g.dgamma;
        }
    }

    fn face_velocity(&self, f: &Face, v: &[f64]) -> f64 {
        -0.5 * (self.dgamma[f.i] + self.dgamma[f.j]) * (v[f.j] - v[f.i]) / self.h
    }

    /// Largest stable `dt` for the explicit cross-diffusion flux at `field`.
    pub fn stable_dt(&mut self, field: &GridField) -> f64 {
        self.refresh_motility(&field.v);
        let w = self
            .faces
            .iter()
            .map(|f| self.face_velocity(f, &field.v).abs())
            .fold(0.0, f64::max);
        let bound = if w > 0.0 {
            self.scheme.cfl * self.h / (self.dim as f64 * w)
        } else {
            f64::INFINITY
        };
        bound.min(self.scheme.dt_max)
    }

    /// Advances `field` by `dt`.
    pub fn step(&mut self, field: &mut GridField, dt: f64) -> Result<StepDiagnostics> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("time step {dt}")));
        }
        self.refresh_motility(&field.v);
        let w = self
            .faces
            .iter()
            .map(|f| self.face_velocity(f, &field.v).abs())
            .fold(0.0, f64::max);
        if w > 0.0 {
            let bound = self.scheme.cfl * self.h / (self.dim as f64 * w);
            if dt > bound * (1.0 + 1e-12) {
                return Err(Error::StabilityViolation { dt, bound });
            }
        }
        let (su1, sv1) = self.react(field, 0.5 * dt);
        let iterations = self.transport(field, dt)?;
        let (su2, sv2) = self.react(field, 0.5 * dt);
        for (idx, w) in field.u.iter_mut().chain(field.v.iter_mut()).enumerate() {
            if *w < 0.0 {
                if *w < -NEGATIVE_TOL {
                    return Err(Error::NegativeDensity {
                        node: idx % self.n,
                        value: *w,
                    });
                }
                *w = 0.0;
            }
        }
        Ok(StepDiagnostics {
            dt,
            u_source: su1 + su2,
            v_source: sv1 + sv2,
            solver_iterations: iterations,
        })
    }

    /// RK4 on the kinetics at every free node; returns the stage-weighted source integrals.
    fn react(&self, field: &mut GridField, dt: f64) -> (f64, f64) {
        let (a, b) = (self.params.a, self.params.b);
        let f = |u: f64, v: f64| (u * (a - b * u), u - v);
        let subs = (dt / self.scheme.reaction_dt).ceil().max(1.0);
        let hs = dt / subs;
        let (mut su, mut sv) = (0.0, 0.0);
        for k in 0..self.n {
            if !self.free[k] {
                continue;
            }
            let (mut u, mut v) = (field.u[k], field.v[k]);
            let (mut du_sum, mut dv_sum) = (0.0, 0.0);
            for _ in 0..subs as usize {
                let k1 = f(u, v);
                let k2 = f(u + 0.5 * hs * k1.0, v + 0.5 * hs * k1.1);
                let k3 = f(u + 0.5 * hs * k2.0, v + 0.5 * hs * k2.1);
                let k4 = f(u + hs * k3.0, v + hs * k3.1);
                let du = hs / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
                let dv = hs / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
                u += du;
                v += dv;
                du_sum += du;
                dv_sum += dv;
            }
            field.u[k] = u;
            field.v[k] = v;
            su += self.volume[k] * du_sum;
            sv += self.volume[k] * dv_sum;
        }
        (su, sv)
    }

    /// Explicit divergence of the cross-diffusion flux `u γ'(v) ∇v`, per node.
    fn advective_rate(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|w| *w = 0.0);
        let hd1 = self.h.powi(self.dim as i32 - 1);
        for f in &self.faces {
            let w = self.face_velocity(f, v);
            let face_u = if w > 0.0 {
                reconstruct(u[f.i], f.before_i.map(|k| u[k]), u[f.j])
            } else {
                reconstruct(u[f.j], f.after_j.map(|k| u[k]), u[f.i])
            };
            let flux = f.alpha * hd1 * w * face_u;
            out[f.i] -= flux;
            out[f.j] += flux;
        }
        for k in 0..self.n {
            out[k] = if self.volume[k] > 0.0 { out[k] / self.volume[k] } else { 0.0 };
        }
    }

    /// Discrete `∇·(γ(v)∇u + uγ'(v)∇v)` evaluated explicitly at every node.
    pub fn transport_rate(&mut self, field: &GridField) -> Vec<f64> {
        self.refresh_motility(&field.v);
        let mut out = vec![0.0; self.n];
        self.advective_rate(&field.u, &field.v, &mut out);
        let hd2 = self.h.powi(self.dim as i32 - 2);
        for f in &self.faces {
            let g = 0.5 * (self.gamma[f.i] + self.gamma[f.j]);
            let flux = f.alpha * hd2 * g * (field.u[f.j] - field.u[f.i]);
            out[f.i] += flux / self.volume[f.i];
            out[f.j] -= flux / self.volume[f.j];
        }
        out
    }

    fn transport(&mut self, field: &mut GridField, dt: f64) -> Result<usize> {
        self.refresh_motility(&field.v);
        let mut adv = std::mem::take(&mut self.work[0]);
        self.advective_rate(&field.u, &field.v, &mut adv);
        for k in 0..self.n {
            self.rhs[k] = if self.free[k] { field.u[k] + dt * adv[k] } else { field.u[k] };
        }
        self.work[0] = adv;
        let hd2 = self.h.powi(self.dim as i32 - 2);
        self.coef = self
            .faces
            .iter()
            .map(|f| dt * f.alpha * hd2 * 0.5 * (self.gamma[f.i] + self.gamma[f.j]))
            .collect();
        let mut rhs = std::mem::take(&mut self.rhs);
        let it_u = self.diffuse(&mut field.u, &mut rhs)?;
        for c in self.coef.iter_mut().zip(&self.faces) {
            *c.0 = dt * c.1.alpha * hd2;
        }
        rhs.clone_from(&field.v);
        let it_v = self.diffuse(&mut field.v, &mut rhs)?;
        self.rhs = rhs;
        Ok(it_u + it_v)
    }

    /// Solves `V x - Σ coef (x_j - x_i) = V rhs` on free nodes, others held at `rhs`.
    fn diffuse(&mut self, x: &mut [f64], rhs: &mut [f64]) -> Result<usize> {
        if self.dim == 1 {
            let n = self.n;
            let mut lower = vec![0.0; n];
            let mut upper = vec![0.0; n];
            let mut diag = vec![1.0; n];
            for k in 0..n {
                if self.free[k] {
                    diag[k] = self.volume[k];
                    rhs[k] *= self.volume[k];
                }
            }
            for (f, &c) in self.faces.iter().zip(&self.coef) {
                if self.free[f.i] {
                    diag[f.i] += c;
                    upper[f.i] = -c;
                }
                if self.free[f.j] {
                    diag[f.j] += c;
                    lower[f.j] = -c;
                }
            }
            let mut scratch = std::mem::take(&mut self.work[1]);
            solve_tridiagonal(&lower, &diag, &upper, rhs, &mut scratch);
            self.work[1] = scratch;
            x.copy_from_slice(rhs);
            Ok(1)
        } else {
            self.conjugate_gradient(x, rhs)
        }
    }

    fn conjugate_gradient(&mut self, x: &mut [f64], rhs: &mut [f64]) -> Result<usize> {
        let n = self.n;
        // fixed and inactive nodes keep their value; move their couplings to the right side
        let mut diag = vec![1.0; n];
        for k in 0..n {
            if self.free[k] {
                diag[k] = self.volume[k];
                rhs[k] *= self.volume[k];
            }
        }
        for (f, &c) in self.faces.iter().zip(&self.coef) {
            match (self.free[f.i], self.free[f.j]) {
                (true, true) => {
                    diag[f.i] += c;
                    diag[f.j] += c;
                }
                (true, false) => {
                    diag[f.i] += c;
                    rhs[f.i] += c * rhs[f.j];
                }
                (false, true) => {
                    diag[f.j] += c;
                    rhs[f.j] += c * rhs[f.i];
                }
                _ => {}
            }
        }
        for k in 0..n {
            if !self.free[k] {
                x[k] = rhs[k];
            }
        }
        let apply = |p: &[f64], out: &mut [f64]| {
            for k in 0..n {
                out[k] = diag[k] * p[k];
            }
            for (f, &c) in self.faces.iter().zip(&self.coef) {
                if self.free[f.i] && self.free[f.j] {
                    out[f.i] -= c * p[f.j];
                    out[f.j] -= c * p[f.i];
                }
            }
        };
        let [_, r, z, p] = &mut self.work;
        let mut q = vec![0.0; n];
        apply(x, &mut q);
        let mut bnorm = 0.0;
        for k in 0..n {
            if self.free[k] {
                r[k] = rhs[k] - q[k];
                bnorm += rhs[k] * rhs[k];
            } else {
                r[k] = 0.0;
            }
        }
        let bnorm = bnorm.sqrt().max(f64::MIN_POSITIVE);
        let mut rz = 0.0;
        for k in 0..n {
            z[k] = r[k] / diag[k];
            p[k] = z[k];
            rz += r[k] * z[k];
        }
        for it in 0..self.scheme.cg_max_iter {
            let rnorm = r.iter().map(|w| w * w).sum::<f64>().sqrt();
            if rnorm <= self.scheme.cg_tol * bnorm {
                return Ok(it);
            }
            apply(p, &mut q);
            let pq: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
            let alpha = rz / pq;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * q[k];
                z[k] = r[k] / diag[k];
            }
            let rz_new: f64 = r.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
        }
        Err(Error::NoConvergence {
            stage: "implicit diffusion",
            t: f64::NAN,
            increment: r.iter().map(|w| w * w).sum::<f64>().sqrt() / bnorm,
        })
    }
}

/// Upwind face value from the donor node with a van Leer limited slope.
fn reconstruct(donor: f64, behind: Option<f64>, ahead: f64) -> f64 {
    match behind {
        Some(b) => {
            let (dm, dp) = (donor - b, ahead - donor);
            if dm * dp > 0.0 {
                donor + dm * dp / (dm + dp)
            } else {
                donor
            }
        }
        None => donor,
    }
}

/// One step from `state`; builds the mesh data on every call, so prefer [`Stepper`] in loops.
pub fn step(state: &GridField, params: &ModelParams, dt: f64) -> Result<GridField> {
    let mut out = state.clone();
    Stepper::new(state, params, SchemeOptions::default()).step(&mut out, dt)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub mass_u: f64,
    pub mass_v: f64,
    /// 1-D front at `u = a/(2b)`, when there is one.
    pub front: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub config: SimConfig,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: (f64, f64),
    pub snapshots: Vec<Snapshot>,
    pub dt_history: Vec<f64>,
    /// Cumulative reaction sources `(∫u, ∫v)` at each snapshot.
    pub sources: Vec<(f64, f64)>,
}

impl Trajectory {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory has the initial snapshot")
    }

    pub fn front_series(&self) -> (Vec<f64>, Vec<f64>) {
        self.snapshots
            .iter()
            .filter_map(|s| s.front.map(|x| (s.t, x)))
            .unzip()
    }
}

fn snapshot(field: &GridField, t: f64, level: f64) -> Snapshot {
    let (mass_u, mass_v) = field.masses();
    let front = if field.dim == 1 {
        front_position(&field.u, field.origin.0, field.h, level).ok()
    } else {
        None
    };
    Snapshot {
        t,
        u: field.u.clone(),
        v: field.v.clone(),
        mass_u,
        mass_v,
        front,
    }
}

/// Runs `config` to `t_end`, recording a snapshot every `cadence`.
pub fn simulate(config: &SimConfig) -> Result<Trajectory> {
    config.validate()?;
    let mut field = config.initial_field()?;
    let mut stepper = Stepper::new(&field, &config.params, config.scheme);
    let level = 0.5 * config.params.carrying_capacity();
    let count = (config.t_end / config.cadence).round() as usize;
    let mut snapshots = vec![snapshot(&field, 0.0, level)];
    let mut sources = vec![(0.0, 0.0)];
    let mut dt_history = Vec::new();
    let (mut t, mut su, mut sv) = (0.0, 0.0, 0.0);
    for k in 1..=count {
        let target = k as f64 * config.cadence;
        while target - t > 1e-12 * target.max(1.0) {
            let dt = stepper.stable_dt(&field).min(target - t);
            let d = stepper.step(&mut field, dt).map_err(|e| Error::AtTime {
                t,
                source: Box::new(e),
            })?;
            su += d.u_source;
            sv += d.v_source;
            dt_history.push(dt);
            t += dt;
        }
        t = target;
        snapshots.push(snapshot(&field, t, level));
        sources.push((su, sv));
    }
    Ok(Trajectory {
        config: config.clone(),
        nx: field.nx,
        ny: field.ny,
        h: field.h,
        origin: field.origin,
        snapshots,
        dt_history,
        sources,
    })
}

/// Paper figure setups: `fig2` (Power m=6, a=b=0.1), `fig3` (Sigmoid, a=b=0.2) in 1-D,
/// `fig4` (Power m=6, a=b=0.1) on the square `[-10,10]^2`.
pub fn preset(name: &str) -> Option<SimConfig> {
    let line = Geometry::Line {
        x_min: 0.0,
        x_max: 200.0,
        h: 0.05,
    };
    let front = InitialCondition::Front {
        k: 2.0,
        x0: 20.0,
        amplitude: 1.0,
    };
    let cfg = match name {
        "fig2" => SimConfig {
            params: ModelParams::power(0.1, 0.1, 6.0).ok()?,
            geometry: line,
            bc: Sides::all(Boundary::DirichletInitial),
            initial: front,
            t_end: 300.0,
            cadence: 1.0,
            scheme: SchemeOptions::default(),
        },
        "fig3" => SimConfig {
            params: ModelParams::new(0.2, 0.2, MotilityFamily::default_sigmoid()).ok()?,
            geometry: line,
            bc: Sides::all(Boundary::DirichletInitial),
            initial: front,
            t_end: 120.0,
            cadence: 1.0,
            scheme: SchemeOptions::default(),
        },
        "fig4" => SimConfig {
            params: ModelParams::power(0.1, 0.1, 6.0).ok()?,
            geometry: Geometry::Rect {
                x_min: -10.0,
                x_max: 10.0,
                y_min: -10.0,
                y_max: 10.0,
                h: 0.1,
                disk: None,
            },
            bc: Sides::all(Boundary::Neumann),
            initial: InitialCondition::Bump2d {
                base: 4.0,
                amplitude: 1.0,
            },
            t_end: 20.0,
            cadence: 2.0,
            scheme: SchemeOptions::default(),
        },
        _ => return None,
    };
    Some(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n_cells: usize, bc: Boundary) -> GridField {
        let h = 10.0 / n_cells as f64;
        GridField::zeros(&Geometry::Line { x_min: 0.0, x_max: 10.0, h }, Sides::all(bc)).unwrap()
    }

    #[test]
    fn equilibrium_is_fixed() {
        let p = ModelParams::power(0.1, 0.1, 6.0).unwrap();
        let mut f = line(200, Boundary::Neumann);
        f.u.fill(1.0);
        f.v.fill(1.0);
        let g = step(&f, &p, 0.1).unwrap();
        for (a, b) in g.u.iter().chain(&g.v).zip(f.u.iter().chain(&f.v)) {
            assert!((a - b).abs() < 1e-12);
        }
        let z = step(&line(200, Boundary::Neumann), &p, 0.1).unwrap();
        assert!(z.u.iter().chain(&z.v).all(|w| *w == 0.0));
    }

    #[test]
    fn uniform_state_follows_kinetics() {
        let p = ModelParams::power(0.2, 0.3, 6.0).unwrap();
        let mut f = line(50, Boundary::Neumann);
        f.u.fill(0.2);
        f.v.fill(1.5);
        let g = step(&f, &p, 0.1).unwrap();
        // fine explicit midpoint reference
        let (mut u, mut v) = (0.2f64, 1.5f64);
        let n = 100_000;
        let h = 0.1 / n as f64;
        for _ in 0..n {
            let (um, vm) = (u + 0.5 * h * u * (0.2 - 0.3 * u), v + 0.5 * h * (u - v));
            u += h * um * (0.2 - 0.3 * um);
            v += h * (um - vm);
        }
        assert!((g.u[7] - u).abs() < 1e-10, "{} {}", g.u[7], u);
        assert!((g.v[7] - v).abs() < 1e-10, "{} {}", g.v[7], v);
        assert!(g.u.iter().all(|w| (w - g.u[0]).abs() < 1e-14));
    }

    #[test]
    fn zero_flux_v_budget() {
        let p = ModelParams::new(0.2, 0.2, MotilityFamily::default_sigmoid()).unwrap();
        let geo = Geometry::Rect {
            x_min: -2.0,
            x_max: 2.0,
            y_min: -2.0,
            y_max: 2.0,
            h: 0.1,
            disk: None,
        };
        let mut f = GridField::zeros(&geo, Sides::all(Boundary::Neumann))
            .unwrap()
            .with_initial(&InitialCondition::Bump2d { base: 0.5, amplitude: 1.0 })
            .unwrap();
        for k in 0..f.len() {
            f.v[k] *= 1.0 + 0.3 * (k as f64).sin();
        }
        let mut s = Stepper::new(&f, &p, SchemeOptions::default());
        for _ in 0..20 {
            let before = f.masses();
            let dt = s.stable_dt(&f);
            let d = s.step(&mut f, dt).unwrap();
            let after = f.masses();
            assert!((after.1 - before.1 - d.v_source).abs() < 1e-10 * after.1);
            assert!((after.0 - before.0 - d.u_source).abs() < 1e-10 * after.0);
        }
    }

    #[test]
    fn disk_mask_conserves_and_stays_inside() {
        let p = ModelParams::power(0.1, 0.1, 6.0).unwrap();
        let geo = Geometry::Rect {
            x_min: -3.0,
            x_max: 3.0,
            y_min: -3.0,
            y_max: 3.0,
            h: 0.1,
            disk: Some(2.5),
        };
        let mut f = GridField::zeros(&geo, Sides::all(Boundary::Neumann))
            .unwrap()
            .with_initial(&InitialCondition::Bump2d { base: 1.0, amplitude: 2.0 })
            .unwrap();
        let mask = f.mask.clone().unwrap();
        let mut s = Stepper::new(&f, &p, SchemeOptions::default());
        for _ in 0..10 {
            let before = f.masses().1;
            let d = s.step(&mut f, 0.05).unwrap();
            assert!((f.masses().1 - before - d.v_source).abs() < 1e-10 * before);
        }
        for (k, on) in mask.iter().enumerate() {
            if !on {
                assert_eq!(f.u[k], 0.0);
            }
        }
    }

    #[test]
    fn dirichlet_sides_hold_their_values() {
        let p = ModelParams::power(0.1, 0.1, 6.0).unwrap();
        let cfg = SimConfig {
            params: p,
            geometry: Geometry::Line { x_min: 0.0, x_max: 40.0, h: 0.1 },
            bc: Sides::all(Boundary::DirichletInitial),
            initial: InitialCondition::Front {
                k: 2.0,
                x0: 10.0,
                amplitude: 1.0,
            },
            t_end: 2.0,
            cadence: 0.5,
            scheme: SchemeOptions::default(),
        };
        let tr = simulate(&cfg).unwrap();
        let first = &tr.snapshots[0];
        let last = tr.last();
        assert_eq!(tr.snapshots.len(), 5);
        assert_eq!(last.u[0], first.u[0]);
        assert_eq!(*last.u.last().unwrap(), *first.u.last().unwrap());
        assert!(last.front.is_some());
    }

    #[test]
    fn oversized_step_is_rejected() {
        let p = ModelParams::power(0.1, 0.1, 6.0).unwrap();
        let mut f = line(1000, Boundary::Neumann);
        for (k, x) in f.x_nodes().iter().enumerate() {
            f.u[k] = 1.0;
            f.v[k] = 0.5 + 0.5 * (3.0 * x).sin();
        }
        let mut s = Stepper::new(&f, &p, SchemeOptions { dt_max: 10.0, ..Default::default() });
        let bound = s.stable_dt(&f);
        assert!(matches!(s.step(&mut f.clone(), 2.0 * bound), Err(Error::StabilityViolation { .. })));
        assert!(s.step(&mut f, bound).is_ok());
    }

    // u and v are monotone on the domain; the limiter drops to first order at extrema
    fn manufactured_error(n_cells: usize) -> f64 {
        let m = 2.0;
        let p = ModelParams::power(0.1, 0.1, m).unwrap();
        let mut f = line(n_cells, Boundary::Neumann);
        let xs = f.x_nodes();
        for (k, &x) in xs.iter().enumerate() {
            f.u[k] = 1.0 + 0.5 * (0.1 * x).sin();
            f.v[k] = 1.0 + 0.5 * (0.12 * x + 0.2).cos();
        }
        let mut s = Stepper::new(&f, &p, SchemeOptions::default());
        let rate = s.transport_rate(&f);
        let mut err = 0.0f64;
        for (k, &x) in xs.iter().enumerate() {
            if !(1.0..=9.0).contains(&x) {
                continue;
            }
            let (u, du, d2u) = (
                1.0 + 0.5 * (0.1 * x).sin(),
                0.05 * (0.1 * x).cos(),
                -0.005 * (0.1 * x).sin(),
            );
            let (v, dv, d2v) = (
                1.0 + 0.5 * (0.12 * x + 0.2).cos(),
                -0.06 * (0.12 * x + 0.2).sin(),
                -0.0072 * (0.12 * x + 0.2).cos(),
            );
            let g = (1.0 + v).powf(-m);
            let g1 = -m * (1.0 + v).powf(-m - 1.0);
            let g2 = m * (m + 1.0) * (1.0 + v).powf(-m - 2.0);
            let exact = g1 * dv * du + g * d2u + du * g1 * dv + u * g2 * dv * dv + u * g1 * d2v;
            err = err.max((rate[k] - exact).abs());
        }
        err
    }

    #[test]
    fn transport_is_second_order() {
        let e1 = manufactured_error(100);
        let e2 = manufactured_error(200);
        let e3 = manufactured_error(400);
        assert!(e1 / e2 > 3.3 && e2 / e3 > 3.3, "{e1} {e2} {e3}");
    }
}

//! Fixtures shared by the criterion benches.

use wavemotil_core::analysis::{speed_window, WaveContext};
use wavemotil_core::certificates::super_solution;
use wavemotil_core::grid::UniformGrid;
use wavemotil_core::pde::{Boundary, Geometry, GridField, InitialCondition, Sides};
use wavemotil_core::ModelParams;

/// The certified parameter set `a = 0.1, b = 60, m = 6`.
pub fn wave_params() -> ModelParams {
    ModelParams::power(0.1, 60.0, 6.0).expect("valid parameters")
}

pub fn critical_context() -> WaveContext {
    let p = wave_params();
    speed_window(&p, 2.0 * p.a.sqrt()).expect("minimal speed is admissible")
}

/// Super-solution sampled on `n` nodes across `[-40/lambda, 160/lambda]`.
pub fn super_profile(n: usize) -> (UniformGrid, Vec<f64>) {
    let ctx = critical_context();
    let grid = UniformGrid::span(-40.0 / ctx.lambda, 160.0 / ctx.lambda, n).expect("grid");
    let u = grid.nodes().iter().map(|&x| super_solution(&ctx, x)).collect();
    (grid, u)
}

/// Steep 1-D front at `a = b = 0.1` on `[0, length]`.
pub fn front_line(length: f64, h: f64) -> GridField {
    GridField::zeros(
        &Geometry::Line {
            x_min: 0.0,
            x_max: length,
            h,
        },
        Sides::all(Boundary::DirichletInitial),
    )
    .and_then(|f| {
        f.with_initial(&InitialCondition::Front {
            k: 2.0,
            x0: 0.2 * length,
            amplitude: 1.0,
        })
    })
    .expect("field")
}

/// The 2-D bump on `[-half, half]^2`.
pub fn bump_square(half: f64, h: f64) -> GridField {
    GridField::zeros(
        &Geometry::Rect {
            x_min: -half,
            x_max: half,
            y_min: -half,
            y_max: half,
            h,
            disk: None,
        },
        Sides::all(Boundary::Neumann),
    )
    .and_then(|f| {
        f.with_initial(&InitialCondition::Bump2d {
            base: 4.0,
            amplitude: 1.0,
        })
    })
    .expect("field")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_consistent() {
        let (grid, u) = super_profile(101);
        assert_eq!(u.len(), grid.n);
        assert!(u.iter().all(|&x| x > 0.0));
        assert_eq!(front_line(10.0, 0.1).len(), 101);
        assert_eq!(bump_square(1.0, 0.1).len(), 21 * 21);
    }
}

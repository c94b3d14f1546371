//! Uniform 1-D grids and a tridiagonal solver shared by the wave and PDE engines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodes `x0 + i h` for `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub x0: f64,
    pub h: f64,
    pub n: usize,
}

impl UniformGrid {
    /// `n` nodes spanning `[x_min, x_max]` inclusive.
    pub fn span(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if n < 3 || !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid [{x_min}, {x_max}] with {n} nodes"
            )));
        }
        Ok(Self {
            x0: x_min,
            h: (x_max - x_min) / (n - 1) as f64,
            n,
        })
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + self.h * i as f64
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n - 1)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Index of the node nearest to `x`, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        let i = ((x - self.x0) / self.h).round();
        i.clamp(0.0, (self.n - 1) as f64) as usize
    }
}

/// Solves a tridiagonal system in place (Thomas algorithm).
///
/// `lower[0]` and `upper[n-1]` are ignored. `rhs` is overwritten with the
/// solution. The matrix must be diagonally dominant or otherwise safe to
/// factor without pivoting.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64], scratch: &mut Vec<f64>) {
    let n = diag.len();
    scratch.clear();
    scratch.resize(n, 0.0);
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        scratch[i] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * scratch[i];
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i + 1] * rhs[i + 1];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_endpoints() {
        let g = UniformGrid::span(-2.0, 3.0, 11).unwrap();
        assert_eq!(g.h, 0.5);
        assert_eq!(g.x_max(), 3.0);
        assert_eq!(g.nearest(0.74), 5);
        assert_eq!(g.nearest(0.76), 6);
        assert_eq!(g.nearest(100.0), 10);
        assert!(UniformGrid::span(1.0, 1.0, 10).is_err());
    }

    #[test]
    fn tridiagonal_matches_dense_product() {
        let n = 7;
        let lower: Vec<f64> = (0..n).map(|i| -1.0 - 0.1 * i as f64).collect();
        let upper: Vec<f64> = (0..n).map(|i| -0.5 + 0.05 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| 4.0 + i as f64).collect();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 2.0).collect();
        let mut rhs: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += upper[i] * x[i + 1];
                }
                s
            })
            .collect();
        let mut scratch = Vec::new();
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs, &mut scratch);
        for (p, q) in rhs.iter().zip(&x) {
            assert!((p - q).abs() < 1e-13);
        }
    }
}

//! Traveling waves of the density-suppressed motility system
//!
//! ```text
//! u_t = Δ(gamma(v) u) + u (a - b u)
//! v_t = Δv + u - v
//! ```
//!
//! Closed-form wave quantities live in [`analysis`], super/sub-solution
//! certificates in [`certificates`], the constructive wave solver in
//! [`waveode`], the direct 1-D/2-D solver in [`pde`] and front diagnostics in
//! [`frontmetrics`].

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod certificates;
pub mod error;
pub mod frontmetrics;
pub mod grid;
pub mod model;
pub mod pde;
pub mod waveode;

pub use error::{Error, Result};
pub use model::{validate_h0, HypothesisReport, ModelParams, MotilityFamily, MotilityValue};

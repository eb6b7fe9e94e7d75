//! Simulation and diagnostics for random dynamical systems on the circle.

// `!(x > 0.0)` is used on purpose to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circle;
pub mod homeo;
pub mod noise;
pub mod rds;
pub mod sde;
pub mod analysis;
pub mod config;
pub mod presets;
pub mod runner;

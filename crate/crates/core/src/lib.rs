//! First-hitting-time probabilities for one-dimensional drift-diffusion models.
//!
//! The pipeline maps a moving-boundary backward Kolmogorov problem to the unit
//! space-time square ([`geometry`]), splits off the constant-drift solution that
//! carries the corner discontinuity ([`refsol`]), solves the smooth remainder with
//! a space-time minimal residual method ([`fem`]) and interpolates the result over
//! model parameters with a Smolyak sparse grid ([`sparsegrid`]). The three model
//! families live in [`models`]; independent finite-difference and Monte Carlo
//! checks live in [`oracles`].

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

mod error;
pub mod exec;
pub mod fem;
pub mod geometry;
pub mod models;
pub mod oracles;
pub mod pipeline;
pub mod refsol;
pub mod sparsegrid;

pub use error::{Error, Result};
pub use exec::Exec;

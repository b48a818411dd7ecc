//! Space-time minimal residual method on the unit square.
//!
//! Trial space: continuous bilinears on a uniform `n x n` mesh, vanishing at
//! `x = 0` and `x = 1`. Test space: per time cell, linear polynomials in `t`
//! times continuous piecewise linears in `x`. The discrete solution minimises
//! the dual-norm residual plus the initial-trace mismatch, which reduces to the
//! SPD system `(B^T A_s^-1 B + C) w = B^T A_s^-1 f`.

mod assembly;
mod coeff;
pub mod linalg;
mod norm;
pub mod quadrature;
mod solve;

pub use assembly::{
    assemble, assemble_load, assemble_rhs, assemble_rhs_with, choose_shift, drift_bounds, BlockOperator,
    QuadratureOptions, SaddleSystem, ShiftPolicy,
};
pub use coeff::CoeffGrid;
pub use norm::{xnorm, NormSystem};
pub use solve::{gradient_residual, solve_mrm, solve_mrm_dense, solve_shifted, SolveOptions, SolveReport};

use crate::geometry::TransformedProblem;
use crate::{Error, Result};

/// Uniform tensor mesh of `[0, 1]^2` with `n` cells per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mesh {
    pub n: usize,
}

impl Mesh {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidProblem(format!("mesh needs n >= 2, got {n}")));
        }
        Ok(Mesh { n })
    }

    /// Mesh with `h = 2^-k`.
    pub fn dyadic(k: u32) -> Result<Self> {
        Mesh::new(1usize << k)
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Interior `x` nodes per time level.
    pub fn nx(&self) -> usize {
        self.n - 1
    }

    pub fn trial_dim(&self) -> usize {
        (self.n + 1) * (self.n - 1)
    }

    pub fn test_dim(&self) -> usize {
        2 * self.n * (self.n - 1)
    }

    /// Trial index of the node `(t_i, x_j)`, `1 <= j <= n - 1`.
    pub fn trial_index(&self, i: usize, j: usize) -> usize {
        i * self.nx() + (j - 1)
    }

    /// Test index of `L_k(t) * hat_j(x)` on time cell `c`.
    pub fn test_index(&self, c: usize, j: usize, k: usize) -> usize {
        c * 2 * self.nx() + 2 * (j - 1) + k
    }
}

/// Drift on unit time, `v^(t, x)`, with its `x` derivative.
pub trait DriftField: Sync {
    fn vhat(&self, t: f64, x: f64) -> f64;
    fn vhat_dx(&self, t: f64, x: f64) -> f64;
}

impl DriftField for TransformedProblem {
    fn vhat(&self, t: f64, x: f64) -> f64 {
        TransformedProblem::vhat(self, t, x)
    }

    fn vhat_dx(&self, t: f64, x: f64) -> f64 {
        TransformedProblem::vhat_dx(self, t, x)
    }
}

/// Drift given by a pair of closures.
pub struct FnField<F, G> {
    pub value: F,
    pub dx: G,
}

impl<F, G> DriftField for FnField<F, G>
where
    F: Fn(f64, f64) -> f64 + Sync,
    G: Fn(f64, f64) -> f64 + Sync,
{
    fn vhat(&self, t: f64, x: f64) -> f64 {
        (self.value)(t, x)
    }

    fn vhat_dx(&self, t: f64, x: f64) -> f64 {
        (self.dx)(t, x)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConstField(pub f64);

impl DriftField for ConstField {
    fn vhat(&self, _: f64, _: f64) -> f64 {
        self.0
    }

    fn vhat_dx(&self, _: f64, _: f64) -> f64 {
        0.0
    }
}

use nalgebra::{DMatrix, DVector};

use super::linalg::{cg, dot};
use super::{CoeffGrid, SaddleSystem};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub cg_tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { cg_tol: 1e-11, max_iter: 200_000 }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Minimiser of the shifted residual functional for load `f`: solves
/// `(B^T A_s^-1 B + C) w = B^T A_s^-1 f` by conjugate gradients.
pub fn solve_shifted(sys: &SaddleSystem, f: &[f64], opts: &SolveOptions) -> Result<(CoeffGrid, SolveReport)> {
    let mesh = sys.mesh;
    if f.len() != mesh.test_dim() {
        return Err(Error::Dimension { expected: mesh.test_dim(), got: f.len() });
    }
    let rhs = sys.reduce_load(f);
    let mut w = vec![0.0; mesh.trial_dim()];
    let mut scratch = vec![0.0; mesh.test_dim()];
    let out = cg(
        |p, out| {
            sys.apply_schur(p, out, &mut scratch);
        },
        &rhs,
        &mut w,
        opts.cg_tol,
        opts.max_iter,
    )?;
    let report = SolveReport { iterations: out.iterations, relative_residual: out.relative_residual };
    Ok((CoeffGrid::from_values(mesh, w)?, report))
}

/// Solves for the load stored in `sys.f` and undoes the shift, returning `e_h`.
pub fn solve_mrm(sys: &SaddleSystem, opts: &SolveOptions) -> Result<(CoeffGrid, SolveReport)> {
    let (mut w, report) = solve_shifted(sys, &sys.f, opts)?;
    w.unshift(sys.lambda);
    Ok((w, report))
}

/// Dense Cholesky solve of the same reduced system; meant for small meshes.
pub fn solve_mrm_dense(sys: &SaddleSystem, f: &[f64]) -> Result<CoeffGrid> {
    let a = sys.a_dense();
    let b = sys.b.to_dense();
    let c = sys.c_dense();
    let a_chol = a.cholesky().ok_or_else(|| Error::Solver("test Gram matrix is not positive definite".into()))?;
    let ainv_b: DMatrix<f64> = a_chol.solve(&b);
    let schur = b.transpose() * ainv_b + c;
    let rhs = b.transpose() * a_chol.solve(&DVector::from_column_slice(f));
    let chol = schur.cholesky().ok_or_else(|| Error::Solver("Schur complement is singular".into()))?;
    let w = chol.solve(&rhs);
    CoeffGrid::from_values(sys.mesh, w.as_slice().to_vec())
}

/// Euclidean norm of the gradient `B^T A_s^-1 (B w - f) + C w` of the residual functional.
pub fn gradient_residual(sys: &SaddleSystem, f: &[f64], w: &CoeffGrid) -> f64 {
    let mesh = sys.mesh;
    let mut scratch = vec![0.0; mesh.test_dim()];
    let mut out = vec![0.0; mesh.trial_dim()];
    sys.apply_schur(&w.values, &mut out, &mut scratch);
    let rhs = sys.reduce_load(f);
    let g: Vec<f64> = out.iter().zip(&rhs).map(|(a, b)| a - b).collect();
    dot(&g, &g).sqrt()
}

//! End-to-end solve: original problem to transformed drift, reference solution,
//! minimal residual correction and the hitting probability.

use crate::fem::{
    assemble, assemble_rhs, choose_shift, drift_bounds, xnorm, CoeffGrid, Mesh, NormSystem, QuadratureOptions,
    ShiftPolicy, SolveOptions, SolveReport,
};
use crate::geometry::{
    solve_time_change, to_tilde, transform_drift, Convention, FpProblem, TildeProblem, TimeChangeOptions,
    TransformedProblem,
};
use crate::refsol::ConstDriftSolution;
use crate::{Error, Exec, Result};

#[derive(Clone, Copy, Debug)]
pub struct PipelineOptions {
    pub convention: Convention,
    pub time_change: TimeChangeOptions,
    pub spectral_tol: f64,
    pub quad: QuadratureOptions,
    pub shift: ShiftPolicy,
    pub strict: bool,
    pub solve: SolveOptions,
    pub exec: Exec,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            convention: Convention::PaperCompat,
            time_change: TimeChangeOptions::default(),
            spectral_tol: 1e-10,
            quad: QuadratureOptions::default(),
            shift: ShiftPolicy::Auto,
            strict: true,
            solve: SolveOptions::default(),
            exec: Exec::default(),
        }
    }
}

/// A problem carried through the transformation, ready to solve.
#[derive(Clone, Debug)]
pub struct Instance {
    pub fp: FpProblem,
    pub tilde: TildeProblem,
    pub problem: TransformedProblem,
    pub refsol: ConstDriftSolution,
    pub opts: PipelineOptions,
}

impl Instance {
    pub fn new(fp: FpProblem, opts: &PipelineOptions) -> Result<Self> {
        let tilde = to_tilde(&fp, opts.convention)?;
        let tc = solve_time_change(&tilde, &opts.time_change)?;
        let problem = transform_drift(&tilde, &tc)?;
        let refsol = ConstDriftSolution::new(problem.v0(), problem.end_time()).with_tol(opts.spectral_tol);
        Ok(Instance { fp, tilde, problem, refsol, opts: *opts })
    }

    pub fn end_time(&self) -> f64 {
        self.problem.end_time()
    }

    /// Discrete correction `e_h` on `mesh` (unit time, shift undone).
    pub fn solve(&self, mesh: Mesh) -> Result<Solved> {
        let o = &self.opts;
        let bounds = drift_bounds(&self.problem, mesh, &o.quad);
        let lambda = choose_shift(bounds, self.end_time(), o.shift, o.strict)?;
        let mut sys = assemble(&self.problem, self.end_time(), mesh, lambda, &o.quad, o.exec)?;
        assemble_rhs(&mut sys, &self.refsol, &self.problem, &o.quad)?;
        let (e, report) = crate::fem::solve_mrm(&sys, &o.solve)?;
        Ok(Solved { e, lambda, report })
    }

    pub fn norm_system(&self, mesh: Mesh) -> Result<NormSystem> {
        NormSystem::new(&self.problem, self.end_time(), mesh, &self.opts.quad, self.opts.exec)
    }

    /// `||e_{h/2} - e_h||` in the equivalent norm of the `h/2` mesh, `h = 2^-k`.
    pub fn refinement_error(&self, k: u32) -> Result<f64> {
        let coarse = self.solve(Mesh::dyadic(k)?)?.e;
        let fine_mesh = Mesh::dyadic(k + 1)?;
        let fine = self.solve(fine_mesh)?.e;
        let ns = self.norm_system(fine_mesh)?;
        xnorm(&fine.sub(&coarse.prolong(fine_mesh.n)?), &ns)
    }

    /// Straightened coordinate of the start state `y` at the original time 0.
    pub fn start_coordinate(&self, y: f64) -> Result<f64> {
        let (a, b) = (self.fp.lower.value(0.0), self.fp.upper.value(0.0));
        if !(y >= a && y <= b) {
            return Err(Error::OutsideDomain { t: 0.0, x: y });
        }
        Ok((y - a) / (b - a))
    }

    /// Probability of leaving through the lower boundary before the horizon when
    /// starting from `y`: `e_h(1, x*) + u(v0)(T, x*)`.
    pub fn hitting_probability(&self, e: &CoeffGrid, y: f64) -> Result<f64> {
        let x = self.start_coordinate(y)?;
        Ok(e.eval(1.0, x) + self.refsol.eval(self.end_time(), x)?)
    }
}

#[derive(Clone, Debug)]
pub struct Solved {
    pub e: CoeffGrid,
    pub lambda: f64,
    pub report: SolveReport,
}

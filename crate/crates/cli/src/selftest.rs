//! Quick closed-form checks of every stage.

use fpt_core::fem::{
    assemble, solve_shifted, xnorm, CoeffGrid, ConstField, Mesh, NormSystem, QuadratureOptions, SolveOptions,
};
use fpt_core::geometry::{Boundary, Drift, FpProblem};
use fpt_core::models::{Model, ModelFamily};
use fpt_core::oracles::{cn_solve, mc_first_hit, CnConfig, CnMode, McConfig};
use fpt_core::pipeline::PipelineOptions;
use fpt_core::refsol::ConstDriftSolution;
use fpt_core::sparsegrid::{build_interpolant, cc_abscissae, SparseGrid};
use fpt_core::{Exec, Result};

type Check = (&'static str, fn() -> Result<bool>);

const CHECKS: &[Check] = &[
    ("cc abscissae of levels 1 and 2", || Ok(cc_abscissae(1) == [0.0] && cc_abscissae(2) == [-1.0, 0.0, 1.0])),
    ("sparse grid N=2 q=3 has 5 points", || Ok(SparseGrid::new(2, 3)?.len() == 5)),
    ("one-point interpolant is constant", || {
        let si = build_interpolant(1, 1, |_| Ok(2.5), Exec::Sequential)?;
        Ok(si.eval(&[0.7])? == 2.5)
    }),
    ("reference solution boundary values", || {
        let rs = ConstDriftSolution::new(1.3, 1.0);
        Ok(rs.eval(0.4, 0.0)? == 1.0 && rs.eval(0.4, 1.0)? == 0.0 && rs.eval(0.0, 0.5)? == 0.0)
    }),
    ("zero load gives zero solution", || {
        let mesh = Mesh::new(4)?;
        let sys = assemble(&ConstField(0.5), 1.0, mesh, 0.0, &QuadratureOptions::default(), Exec::Sequential)?;
        let (w, _) = solve_shifted(&sys, &vec![0.0; mesh.test_dim()], &SolveOptions::default())?;
        Ok(w.max_abs() == 0.0)
    }),
    ("norm of zero is zero", || {
        let ns =
            NormSystem::new(&ConstField(0.0), 1.0, Mesh::new(4)?, &QuadratureOptions::default(), Exec::Sequential)?;
        Ok(xnorm(&CoeffGrid::zeros(ns.mesh()), &ns)? == 0.0)
    }),
    ("prolongation keeps nodal values", || {
        let w = CoeffGrid::interpolate(Mesh::new(4)?, |t, x| t + x * x);
        let f = w.prolong(8)?;
        Ok((0..=4).all(|i| (1..4).all(|j| f.node(2 * i, 2 * j) == w.node(i, j))))
    }),
    ("constant drift gives zero correction", || {
        let e = Model::new(ModelFamily::LinearDrift)
            .instantiate(&[0.0; 3], &PipelineOptions::default())?
            .solve(Mesh::new(8)?)?
            .e;
        Ok(e.max_abs() == 0.0)
    }),
    ("finite differences without forcing stay zero", || {
        let rs = ConstDriftSolution::new(1.0, 1.0);
        let g = cn_solve(&ConstField(1.0), 1.0, CnConfig::new(16, 16)?, CnMode::Correction(&rs))?;
        Ok(g.values.iter().all(|&v| v == 0.0))
    }),
    ("start on the lower boundary is absorbed", || {
        let fp = FpProblem::new(Drift::constant(0.0), 1.0, Boundary::constant(0.0), Boundary::constant(1.0), 1.0)?;
        let cfg = McConfig { paths: 10, dt: 1e-2, seed: 1, bridge: true };
        Ok(mc_first_hit(&fp, 0.0, &cfg, Exec::Sequential)?.p == 1.0)
    }),
];

/// Runs every check, printing one line each; returns the number of failures.
pub fn run() -> usize {
    let mut failed = 0;
    for (name, check) in CHECKS {
        let verdict = match check() {
            Ok(true) => "ok".to_string(),
            Ok(false) => "FAIL".to_string(),
            Err(e) => format!("FAIL ({e})"),
        };
        if verdict != "ok" {
            failed += 1;
        }
        println!("{verdict:>4}  {name}");
    }
    failed
}

use super::assembly::{assemble_with, TestGram};
use super::linalg::dot;
use super::{CoeffGrid, DriftField, Mesh, QuadratureOptions, SaddleSystem};
use crate::{Error, Exec, Result};

/// Blocks of the equivalent trial norm `sqrt(w^T B^T A^-1 B w + w^T C w)`: unshifted
/// `B` and the plain space-stiffness Gram `A`.
#[derive(Clone, Debug)]
pub struct NormSystem {
    sys: SaddleSystem,
}

impl NormSystem {
    pub fn new(
        field: &dyn DriftField,
        end_time: f64,
        mesh: Mesh,
        quad: &QuadratureOptions,
        exec: Exec,
    ) -> Result<Self> {
        let sys = assemble_with(field, end_time, mesh, 0.0, quad, exec, TestGram::Stiffness)?;
        Ok(NormSystem { sys })
    }

    pub fn mesh(&self) -> Mesh {
        self.sys.mesh
    }

    pub fn system(&self) -> &SaddleSystem {
        &self.sys
    }
}

/// Equivalent norm of `w`; coarser nested grids are prolonged first.
pub fn xnorm(w: &CoeffGrid, ns: &NormSystem) -> Result<f64> {
    let mesh = ns.mesh();
    let fine;
    let w = if w.n == mesh.n {
        w
    } else if mesh.n.is_multiple_of(w.n) {
        fine = w.prolong(mesh.n)?;
        &fine
    } else {
        return Err(Error::NonNestedMesh { from: w.n, to: mesh.n });
    };
    let sys = &ns.sys;
    let mut bw = vec![0.0; mesh.test_dim()];
    sys.b.apply(&w.values, &mut bw, sys.exec);
    let mut y = bw.clone();
    sys.solve_a(&mut y);
    let mut cw = vec![0.0; mesh.trial_dim()];
    sys.apply_c(&w.values, &mut cw);
    let q = dot(&bw, &y) + dot(&w.values, &cw);
    Ok(q.max(0.0).sqrt())
}

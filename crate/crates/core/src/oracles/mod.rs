//! Independent checks for the space-time solver: finite differences and Monte Carlo.

mod cn;
mod mc;

pub use cn::{cn_solve, thomas, CnConfig, CnGrid, CnMode};
pub use mc::{mc_first_hit, McConfig, McEstimate, CHUNK_PATHS};

use crate::fem::Mesh;
use crate::models::Model;
use crate::pipeline::PipelineOptions;
use crate::Result;

/// Probability that the model at `rho`, started from `y`, leaves through the lower
/// boundary before the horizon, from the space-time solution on `mesh`.
pub fn first_hitting_prob(model: &Model, rho: &[f64], y: f64, mesh: Mesh, opts: &PipelineOptions) -> Result<f64> {
    let inst = model.instantiate(rho, opts)?;
    let solved = inst.solve(mesh)?;
    inst.hitting_probability(&solved.e, y)
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("boundaries meet or cross at time {time} (lower {lower}, upper {upper})")]
    BoundariesMeet { time: f64, lower: f64, upper: f64 },

    #[error("time change did not reach {target} within integration span {span}")]
    TimeChangeStalled { target: f64, span: f64 },

    #[error("point ({t}, {x}) lies outside the domain")]
    OutsideDomain { t: f64, x: f64 },

    #[error("series for u(t={t}, x={x}) not converged after {terms} terms")]
    SeriesNotConverged { t: f64, x: f64, terms: usize },

    #[error("spatial form is not coercive without a shift (max |v| = {max_drift}, min dv/dx = {min_slope})")]
    NotCoercive { max_drift: f64, min_slope: f64 },

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("mesh with n = {to} is not a refinement of n = {from}")]
    NonNestedMesh { from: usize, to: usize },

    #[error("parameter point {0:?} lies outside [-1, 1]^N")]
    OutsideCube(Vec<f64>),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("evaluation at rho = {rho:?} failed: {source}")]
    Evaluator {
        rho: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

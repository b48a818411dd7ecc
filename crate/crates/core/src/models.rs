//! The three model families: hyperbolic drift, linear state-dependent drift and
//! collapsing boundaries, each parametrised by the cube `[-1, 1]^N`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::{Boundary, Drift, FpProblem};
use crate::pipeline::{Instance, PipelineOptions};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Hyperbolic,
    LinearDrift,
    Collapsing,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 3] = [ModelFamily::Hyperbolic, ModelFamily::LinearDrift, ModelFamily::Collapsing];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelFamily::Hyperbolic => "hyperbolic",
            ModelFamily::LinearDrift => "linear_drift",
            ModelFamily::Collapsing => "collapsing",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelFamily::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidProblem(format!("unknown model family `{s}`")))
    }
}

/// Physical ranges, one axis per parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterBox {
    pub names: Vec<String>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ParameterBox {
    pub fn new(axes: &[(&str, f64, f64)]) -> Result<Self> {
        let mut b = ParameterBox { names: Vec::new(), lo: Vec::new(), hi: Vec::new() };
        for &(name, lo, hi) in axes {
            b.names.push(name.to_string());
            b.lo.push(lo);
            b.hi.push(hi);
        }
        b.validate()?;
        Ok(b)
    }

    fn validate(&self) -> Result<()> {
        for k in 0..self.dim() {
            if !(self.lo[k] < self.hi[k]) {
                return Err(Error::InvalidProblem(format!(
                    "range of {} is empty: [{}, {}]",
                    self.names[k], self.lo[k], self.hi[k]
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn set_range(&mut self, name: &str, lo: f64, hi: f64) -> Result<()> {
        let k = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::InvalidProblem(format!("no parameter named `{name}`")))?;
        self.lo[k] = lo;
        self.hi[k] = hi;
        self.validate()
    }

    /// Affine map from the cube: `rho_k -> mid_k + rho_k * halfwidth_k`.
    pub fn map(&self, rho: &[f64]) -> Result<Vec<f64>> {
        if rho.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: rho.len() });
        }
        if rho.iter().any(|r| !(-1.0..=1.0).contains(r)) {
            return Err(Error::OutsideCube(rho.to_vec()));
        }
        Ok((0..self.dim())
            .map(|k| 0.5 * (self.lo[k] + self.hi[k]) + rho[k] * 0.5 * (self.hi[k] - self.lo[k]))
            .collect())
    }
}

/// Named physical parameter values.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl Params {
    pub fn get(&self, name: &str) -> f64 {
        let k = self.names.iter().position(|n| n == name).unwrap_or_else(|| panic!("no parameter `{name}`"));
        self.values[k]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub family: ModelFamily,
    pub sigma: f64,
    pub param_box: ParameterBox,
    /// Horizon for families that do not carry it as a parameter.
    pub fixed_tau: f64,
}

impl Model {
    pub fn new(family: ModelFamily) -> Self {
        let param_box = match family {
            ModelFamily::Hyperbolic => ParameterBox::new(&[
                ("mu0", -1.97, -1.64),
                ("mu1", -2.31, -0.99),
                ("t0", 0.13, 0.40),
                ("beta0", 1.38, 2.26),
                ("tau", 0.1, 2.5),
            ]),
            ModelFamily::LinearDrift => {
                ParameterBox::new(&[("mu0", -2.0, 2.0), ("mu1", -4.0, 4.0), ("beta0", 0.5, 2.0)])
            }
            ModelFamily::Collapsing => {
                ParameterBox::new(&[("mu0", -5.86, 0.0), ("beta0", 0.56, 3.93), ("T0", 3.0, 20.0), ("tau", 0.1, 2.5)])
            }
        }
        .expect("built-in ranges are valid");
        Model { family, sigma: 1.0, param_box, fixed_tau: 2.5 }
    }

    pub fn dim(&self) -> usize {
        self.param_box.dim()
    }

    pub fn physical_params(&self, rho: &[f64]) -> Result<Params> {
        Ok(Params { names: self.param_box.names.clone(), values: self.param_box.map(rho)? })
    }

    /// The original first-passage problem at `rho`.
    pub fn fp_problem(&self, rho: &[f64]) -> Result<FpProblem> {
        let p = self.physical_params(rho)?;
        match self.family {
            ModelFamily::Hyperbolic => {
                let (mu0, mu1, t0, beta0) = (p.get("mu0"), p.get("mu1"), p.get("t0"), p.get("beta0"));
                let drift = Drift::new(move |t, _| mu0 + mu1 * t / (t + t0), |_, _| 0.0);
                FpProblem::new(drift, self.sigma, Boundary::constant(0.0), Boundary::constant(beta0), p.get("tau"))
            }
            ModelFamily::LinearDrift => {
                let (mu0, mu1, beta0) = (p.get("mu0"), p.get("mu1"), p.get("beta0"));
                let drift = Drift::new(move |_, x| mu0 + mu1 * (beta0 - x), move |_, _| -mu1);
                FpProblem::new(drift, self.sigma, Boundary::constant(0.0), Boundary::constant(beta0), self.fixed_tau)
            }
            ModelFamily::Collapsing => {
                let (mu0, beta0, t0, tau) = (p.get("mu0"), p.get("beta0"), p.get("T0"), p.get("tau"));
                if tau >= t0 {
                    return Err(Error::BoundariesMeet { time: t0, lower: 0.5 * beta0, upper: 0.5 * beta0 });
                }
                FpProblem::new(
                    Drift::constant(mu0),
                    self.sigma,
                    Boundary::affine(0.0, beta0 / (2.0 * t0)),
                    Boundary::affine(beta0, -beta0 / (2.0 * t0)),
                    tau,
                )
            }
        }
    }

    /// Transformed problem and constant-drift reference at `rho`.
    pub fn instantiate(&self, rho: &[f64], opts: &PipelineOptions) -> Result<Instance> {
        Instance::new(self.fp_problem(rho)?, opts)
    }
}

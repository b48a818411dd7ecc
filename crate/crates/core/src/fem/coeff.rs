use serde::{Deserialize, Serialize};

use super::Mesh;
use crate::{Error, Result};

/// Nodal values of a trial function; columns `x = 0` and `x = 1` are implicitly zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffGrid {
    pub n: usize,
    pub values: Vec<f64>,
}

impl CoeffGrid {
    pub fn zeros(mesh: Mesh) -> Self {
        CoeffGrid { n: mesh.n, values: vec![0.0; mesh.trial_dim()] }
    }

    pub fn from_values(mesh: Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.trial_dim() {
            return Err(Error::Dimension { expected: mesh.trial_dim(), got: values.len() });
        }
        Ok(CoeffGrid { n: mesh.n, values })
    }

    /// Nodal interpolant of `f` (boundary columns dropped).
    pub fn interpolate(mesh: Mesh, f: impl Fn(f64, f64) -> f64) -> Self {
        let h = mesh.h();
        let mut values = Vec::with_capacity(mesh.trial_dim());
        for i in 0..=mesh.n {
            for j in 1..mesh.n {
                values.push(f(i as f64 * h, j as f64 * h));
            }
        }
        CoeffGrid { n: mesh.n, values }
    }

    pub fn mesh(&self) -> Mesh {
        Mesh { n: self.n }
    }

    /// Value at node `(t_i, x_j)`, `0 <= j <= n`.
    pub fn node(&self, i: usize, j: usize) -> f64 {
        if j == 0 || j == self.n {
            0.0
        } else {
            self.values[i * (self.n - 1) + j - 1]
        }
    }

    /// Bilinear evaluation at `(t, x)` in the unit square.
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let n = self.n as f64;
        let (ts, xs) = (t.clamp(0.0, 1.0) * n, x.clamp(0.0, 1.0) * n);
        let i = (ts.floor() as usize).min(self.n - 1);
        let j = (xs.floor() as usize).min(self.n - 1);
        let (a, b) = (ts - i as f64, xs - j as f64);
        (1.0 - a) * ((1.0 - b) * self.node(i, j) + b * self.node(i, j + 1))
            + a * ((1.0 - b) * self.node(i + 1, j) + b * self.node(i + 1, j + 1))
    }

    /// Exact embedding into the mesh with `to` cells per axis.
    pub fn prolong(&self, to: usize) -> Result<CoeffGrid> {
        if to < self.n || !to.is_multiple_of(self.n) {
            return Err(Error::NonNestedMesh { from: self.n, to });
        }
        let r = to / self.n;
        let mut values = Vec::with_capacity((to + 1) * (to - 1));
        for i in 0..=to {
            for j in 1..to {
                let (ic, ir) = (i / r, i % r);
                let (jc, jr) = (j / r, j % r);
                let a = ir as f64 / r as f64;
                let b = jr as f64 / r as f64;
                let i1 = (ic + 1).min(self.n);
                let j1 = (jc + 1).min(self.n);
                let v = (1.0 - a) * ((1.0 - b) * self.node(ic, jc) + b * self.node(ic, j1))
                    + a * ((1.0 - b) * self.node(i1, jc) + b * self.node(i1, j1));
                values.push(v);
            }
        }
        Ok(CoeffGrid { n: to, values })
    }

    /// Multiplies the nodal values at time `t_i` by `exp(lambda t_i)`.
    pub fn unshift(&mut self, lambda: f64) {
        if lambda == 0.0 {
            return;
        }
        let nx = self.n - 1;
        let h = 1.0 / self.n as f64;
        for (i, row) in self.values.chunks_mut(nx).enumerate() {
            let g = (lambda * i as f64 * h).exp();
            row.iter_mut().for_each(|v| *v *= g);
        }
    }

    pub fn scaled_add(&mut self, a: f64, other: &CoeffGrid) {
        assert_eq!(self.n, other.n);
        self.values.iter_mut().zip(&other.values).for_each(|(s, o)| *s += a * o);
    }

    pub fn sub(&self, other: &CoeffGrid) -> CoeffGrid {
        let mut out = self.clone();
        out.scaled_add(-1.0, other);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

//! Smolyak interpolation on `[-1, 1]^N` over nested Clenshaw-Curtis abscissae.
//!
//! Level 1 is the single point `0`; level `i >= 2` has `2^(i-1) + 1` points
//! `cos(j pi / 2^(i-1))`. The interpolant is built by the combination technique:
//! tensor interpolants on levels `i` with `q - N + 1 <= |i| <= q`, weighted by
//! `(-1)^(q - |i|) binom(N - 1, q - |i|)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::fem::CoeffGrid;
use crate::{Error, Exec, Result};

/// Values the interpolant can combine linearly.
pub trait Payload: Clone + Send + Sync {
    fn zero_like(&self) -> Self;
    fn scaled_add(&mut self, a: f64, other: &Self);
}

impl Payload for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }

    fn scaled_add(&mut self, a: f64, other: &Self) {
        *self += a * other;
    }
}

impl Payload for Vec<f64> {
    fn zero_like(&self) -> Self {
        vec![0.0; self.len()]
    }

    fn scaled_add(&mut self, a: f64, other: &Self) {
        assert_eq!(self.len(), other.len());
        self.iter_mut().zip(other).for_each(|(s, o)| *s += a * o);
    }
}

impl Payload for CoeffGrid {
    fn zero_like(&self) -> Self {
        CoeffGrid { n: self.n, values: vec![0.0; self.values.len()] }
    }

    fn scaled_add(&mut self, a: f64, other: &Self) {
        CoeffGrid::scaled_add(self, a, other);
    }
}

pub fn cc_size(level: usize) -> usize {
    assert!(level >= 1);
    if level == 1 {
        1
    } else {
        (1 << (level - 1)) + 1
    }
}

/// Position of point `j` of `level` as a dyadic fraction `r` of `pi`, scaled by
/// `2^(max_level - 1)` so every level shares one integer key space.
fn dyadic_key(level: usize, j: usize, max_level: usize) -> u64 {
    if level == 1 {
        1u64 << (max_level - 2).min(62)
    } else {
        (j as u64) << (max_level - level)
    }
}

/// `cos(r pi)` written as `sin((1/2 - r) pi)`, which is exactly zero at `r = 1/2`
/// and exactly odd about it.
fn key_point(key: u64, max_level: usize) -> f64 {
    let r = key as f64 / (1u64 << (max_level - 1)) as f64;
    ((0.5 - r) * PI).sin()
}

/// Abscissae of `level`, ascending.
pub fn cc_abscissae(level: usize) -> Vec<f64> {
    let max = level.max(2);
    let mut pts: Vec<f64> = (0..cc_size(level)).map(|j| key_point(dyadic_key(level, j, max), max)).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts
}

fn level_keys(level: usize, max_level: usize) -> Vec<u64> {
    (0..cc_size(level)).map(|j| dyadic_key(level, j, max_level)).collect()
}

/// Barycentric weights for the Chebyshev extrema in key order (`cos(j pi / (m - 1))`).
fn bary_weights(level: usize) -> Vec<f64> {
    let m = cc_size(level);
    if m == 1 {
        return vec![1.0];
    }
    (0..m)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == m - 1 {
                0.5 * s
            } else {
                s
            }
        })
        .collect()
}

/// Lagrange basis values of `level` at `x`, in key order.
fn lagrange(level: usize, nodes: &[f64], x: f64) -> Vec<f64> {
    let m = nodes.len();
    if m == 1 {
        return vec![1.0];
    }
    if let Some(k) = nodes.iter().position(|&p| p == x) {
        let mut out = vec![0.0; m];
        out[k] = 1.0;
        return out;
    }
    let w = bary_weights(level);
    let terms: Vec<f64> = (0..m).map(|j| w[j] / (x - nodes[j])).collect();
    let denom: f64 = terms.iter().sum();
    terms.into_iter().map(|t| t / denom).collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Multi-indices `i >= 1` with `lo <= |i| <= hi`.
fn multi_indices(dim: usize, lo: usize, hi: usize) -> Vec<Vec<usize>> {
    fn rec(dim: usize, lo: usize, hi: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let used: usize = prefix.iter().sum();
        if prefix.len() == dim {
            if used >= lo && used <= hi {
                out.push(prefix.clone());
            }
            return;
        }
        let remaining = dim - prefix.len() - 1;
        let mut l = 1;
        while used + l + remaining <= hi {
            prefix.push(l);
            rec(dim, lo, hi, prefix, out);
            prefix.pop();
            l += 1;
        }
    }
    let mut out = Vec::new();
    rec(dim, lo, hi, &mut Vec::new(), &mut out);
    out
}

/// Row-major odometer step, last axis fastest; false after wrapping around.
fn advance(counter: &mut [usize], size: impl Fn(usize) -> usize) -> bool {
    for k in (0..counter.len()).rev() {
        counter[k] += 1;
        if counter[k] < size(k) {
            return true;
        }
        counter[k] = 0;
    }
    false
}

#[derive(Clone, Debug)]
struct Component {
    levels: Vec<usize>,
    coef: f64,
    /// Point indices in row-major tensor order over the per-axis key order.
    points: Vec<usize>,
}

/// Sparse grid layout for dimension `N` and level `q`, independent of payloads.
#[derive(Clone, Debug)]
pub struct SparseGrid {
    pub dim: usize,
    pub q: usize,
    max_level: usize,
    keys: Vec<Vec<u64>>,
    points: Vec<Vec<f64>>,
    components: Vec<Component>,
}

impl SparseGrid {
    pub fn new(dim: usize, q: usize) -> Result<Self> {
        if dim == 0 || q < dim {
            return Err(Error::InvalidProblem(format!("sparse grid needs q >= N >= 1, got N = {dim}, q = {q}")));
        }
        let max_level = (q - dim + 1).max(2);
        let mut index: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
        let mut keys = Vec::new();
        let mut components = Vec::new();
        for levels in multi_indices(dim, (q + 1).saturating_sub(dim).max(dim), q) {
            let sum: usize = levels.iter().sum();
            let d = q - sum;
            let coef = if d.is_multiple_of(2) { 1.0 } else { -1.0 } * binomial(dim - 1, d);
            let axes: Vec<Vec<u64>> = levels.iter().map(|&l| level_keys(l, max_level)).collect();
            let mut pts = Vec::new();
            let mut counter = vec![0usize; dim];
            loop {
                let key: Vec<u64> = (0..dim).map(|k| axes[k][counter[k]]).collect();
                let next = index.len();
                let id = *index.entry(key.clone()).or_insert_with(|| {
                    keys.push(key);
                    next
                });
                pts.push(id);
                if !advance(&mut counter, |k| axes[k].len()) {
                    break;
                }
            }
            components.push(Component { levels, coef, points: pts });
        }
        let points = keys.iter().map(|k| k.iter().map(|&v| key_point(v, max_level)).collect()).collect();
        Ok(SparseGrid { dim, q, max_level, keys, points, components })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Combination weight of every stored point for evaluation at `rho`.
    pub fn weights(&self, rho: &[f64]) -> Result<Vec<f64>> {
        if rho.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: rho.len() });
        }
        if rho.iter().any(|r| !(-1.0..=1.0).contains(r)) {
            return Err(Error::OutsideCube(rho.to_vec()));
        }
        let mut cache: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
        let mut out = vec![0.0; self.len()];
        for comp in &self.components {
            let basis: Vec<Vec<f64>> = (0..self.dim)
                .map(|k| {
                    let l = comp.levels[k];
                    cache
                        .entry((k, l))
                        .or_insert_with(|| {
                            let nodes: Vec<f64> =
                                level_keys(l, self.max_level).iter().map(|&v| key_point(v, self.max_level)).collect();
                            lagrange(l, &nodes, rho[k])
                        })
                        .clone()
                })
                .collect();
            let mut counter = vec![0usize; self.dim];
            for &p in &comp.points {
                let w: f64 = (0..self.dim).map(|k| basis[k][counter[k]]).product();
                out[p] += comp.coef * w;
                advance(&mut counter, |k| basis[k].len());
            }
        }
        Ok(out)
    }
}

/// Sparse grid with one payload per point.
#[derive(Clone, Debug)]
pub struct SparseInterpolant<P> {
    pub grid: SparseGrid,
    pub payloads: Vec<P>,
}

/// Evaluates `f` once per sparse-grid point (concurrently under `exec`) and stores the results.
pub fn build_interpolant<P, F>(dim: usize, q: usize, f: F, exec: Exec) -> Result<SparseInterpolant<P>>
where
    P: Payload,
    F: Fn(&[f64]) -> Result<P> + Sync + Send,
{
    let grid = SparseGrid::new(dim, q)?;
    let results = exec
        .map_slice(grid.points(), |rho| f(rho).map_err(|e| Error::Evaluator { rho: rho.clone(), source: Box::new(e) }));
    let payloads = results.into_iter().collect::<Result<Vec<P>>>()?;
    Ok(SparseInterpolant { grid, payloads })
}

impl<P: Payload> SparseInterpolant<P> {
    pub fn eval(&self, rho: &[f64]) -> Result<P> {
        let w = self.grid.weights(rho)?;
        let mut out = self.payloads[0].zero_like();
        for (wi, p) in w.iter().zip(&self.payloads) {
            if *wi != 0.0 {
                out.scaled_add(*wi, p);
            }
        }
        Ok(out)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        self.grid.points()
    }
}

#[derive(Serialize, Deserialize)]
struct Stored<P> {
    dim: usize,
    q: usize,
    keys: Vec<Vec<u64>>,
    payloads: Vec<P>,
}

impl<P: Payload + Serialize + DeserializeOwned> SparseInterpolant<P> {
    pub fn to_json(&self) -> Result<String> {
        let stored = Stored {
            dim: self.grid.dim,
            q: self.grid.q,
            keys: self.grid.keys.clone(),
            payloads: self.payloads.clone(),
        };
        Ok(serde_json::to_string(&stored)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let stored: Stored<P> = serde_json::from_str(s)?;
        let grid = SparseGrid::new(stored.dim, stored.q)?;
        if stored.keys != grid.keys || stored.payloads.len() != grid.len() {
            return Err(Error::InvalidProblem("stored point set does not match its sparse grid".into()));
        }
        Ok(SparseInterpolant { grid, payloads: stored.payloads })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

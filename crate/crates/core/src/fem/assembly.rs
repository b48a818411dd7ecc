use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::linalg::BandedSpd;
use super::quadrature::{gauss_legendre, graded, mapped};
use super::{DriftField, Mesh};
use crate::refsol::ConstDriftSolution;
use crate::{Error, Exec, Result};

/// Interleaved `(j, k)` test ordering inside a time cell couples at most three
/// neighbours on either side.
const TEST_BANDWIDTH: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureOptions {
    /// Gauss points per axis and cell for `A_s`, `B`, `C`.
    pub operator_order: usize,
    /// Gauss points per axis and (sub)cell for the load.
    pub forcing_order: usize,
    /// Geometric refinement levels towards `t = 0` on the first time row, and
    /// towards `x = 0` on the corner cell.
    pub grading_levels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { operator_order: 3, forcing_order: 6, grading_levels: 24 }
    }
}

/// How the coercivity shift `lambda` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum ShiftPolicy {
    /// No shift when `max|v^| / pi < 0.9` or `min dv^/dx >= -1.8 pi^2` (either makes
    /// the spatial form coercive); otherwise the smallest shift that cancels the
    /// negative part of `T dv^/dx / 2`.
    #[default]
    Auto,
    /// `lambda = T max|v^|^2 / 4 + 1` once `T max|v^| / pi >= 0.9`, from Young's inequality.
    Young,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftBounds {
    pub max_abs: f64,
    pub min_dx: f64,
}

/// Samples `|v^|` and `dv^/dx` on the operator quadrature points and mesh nodes.
pub fn drift_bounds(field: &dyn DriftField, mesh: Mesh, quad: &QuadratureOptions) -> DriftBounds {
    let rule = gauss_legendre(quad.operator_order);
    let h = mesh.h();
    let mut coords: Vec<f64> = (0..=mesh.n).map(|i| i as f64 * h).collect();
    for c in 0..mesh.n {
        coords.extend(mapped(&rule, c as f64 * h, (c + 1) as f64 * h).map(|(x, _)| x));
    }
    let mut out = DriftBounds { max_abs: 0.0, min_dx: f64::INFINITY };
    for &t in &coords {
        for &x in &coords {
            out.max_abs = out.max_abs.max(field.vhat(t, x).abs());
            out.min_dx = out.min_dx.min(field.vhat_dx(t, x));
        }
    }
    out
}

/// Picks `lambda` for `policy`. With `strict`, a zero shift on a drift that fails
/// the sufficient coercivity test is an error instead of a silent risk.
pub fn choose_shift(bounds: DriftBounds, end_time: f64, policy: ShiftPolicy, strict: bool) -> Result<f64> {
    let by_sup = bounds.max_abs / PI < 0.9;
    let by_slope = bounds.min_dx >= -1.8 * PI * PI;
    let lambda = match policy {
        ShiftPolicy::Auto => {
            if by_sup || by_slope {
                0.0
            } else {
                0.5 * end_time * (-bounds.min_dx).max(0.0)
            }
        }
        ShiftPolicy::Young => {
            if end_time * bounds.max_abs / PI < 0.9 {
                0.0
            } else {
                0.25 * end_time * bounds.max_abs * bounds.max_abs + 1.0
            }
        }
        ShiftPolicy::Fixed(l) => l,
    };
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidProblem(format!("shift must be non-negative, got {lambda}")));
    }
    let coercive = by_sup || by_slope || lambda + 0.5 * end_time * bounds.min_dx >= 0.0;
    if strict && !coercive {
        return Err(Error::NotCoercive { max_drift: bounds.max_abs, min_slope: bounds.min_dx });
    }
    Ok(lambda)
}

/// Test-by-trial operator stored per test row: `vals[6 r + 3 a + d]` couples row
/// `r = (c, j, k)` to trial node `(c + a, j + d - 1)`.
#[derive(Clone, Debug)]
pub struct BlockOperator {
    pub mesh: Mesh,
    vals: Vec<f64>,
}

impl BlockOperator {
    pub fn apply(&self, w: &[f64], out: &mut [f64], exec: Exec) {
        let m = self.mesh;
        let nx = m.nx();
        assert_eq!(w.len(), m.trial_dim());
        assert_eq!(out.len(), m.test_dim());
        exec.for_each_chunk_mut(out, 2 * nx, |c, rows| {
            for j in 1..=nx {
                for k in 0..2 {
                    let r = 2 * (j - 1) + k;
                    let base = 6 * (m.test_index(c, j, k));
                    let mut acc = 0.0;
                    for a in 0..2 {
                        for d in 0..3 {
                            let jj = j + d;
                            if jj < 2 || jj > nx + 1 {
                                continue;
                            }
                            acc += self.vals[base + 3 * a + d] * w[m.trial_index(c + a, jj - 1)];
                        }
                    }
                    rows[r] = acc;
                }
            }
        });
    }

    pub fn apply_transpose(&self, y: &[f64], out: &mut [f64], exec: Exec) {
        let m = self.mesh;
        let nx = m.nx();
        assert_eq!(y.len(), m.test_dim());
        assert_eq!(out.len(), m.trial_dim());
        exec.for_each_chunk_mut(out, nx, |i, nodes| {
            for jj in 1..=nx {
                let mut acc = 0.0;
                // cell i - 1 sees node i as its upper time node, cell i as its lower one
                for (c, a) in [(i.wrapping_sub(1), 1usize), (i, 0usize)] {
                    if c >= m.n {
                        continue;
                    }
                    for j in jj.saturating_sub(1).max(1)..=(jj + 1).min(nx) {
                        let d = jj + 1 - j;
                        for k in 0..2 {
                            let row = m.test_index(c, j, k);
                            acc += self.vals[6 * row + 3 * a + d] * y[row];
                        }
                    }
                }
                nodes[jj - 1] = acc;
            }
        });
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let m = self.mesh;
        let mut out = DMatrix::zeros(m.test_dim(), m.trial_dim());
        for c in 0..m.n {
            for j in 1..=m.nx() {
                for k in 0..2 {
                    let row = m.test_index(c, j, k);
                    for a in 0..2 {
                        for d in 0..3 {
                            let jj = j + d;
                            if (2..=m.nx() + 1).contains(&jj) {
                                out[(row, m.trial_index(c + a, jj - 1))] += self.vals[6 * row + 3 * a + d];
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Which symmetric form is used as the test-space Gram matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum TestGram {
    /// Symmetric part of the (shifted) spatial operator.
    SymmetricPart,
    /// Plain `int int d_x z d_x z'`, used by the equivalent norm.
    Stiffness,
}

/// Blocks of the minimal residual normal equations.
#[derive(Clone, Debug)]
pub struct SaddleSystem {
    pub mesh: Mesh,
    pub end_time: f64,
    pub lambda: f64,
    pub b: BlockOperator,
    a_raw: Vec<BandedSpd>,
    a_factored: Vec<BandedSpd>,
    /// Load vector; zero until a right-hand side is assembled.
    pub f: Vec<f64>,
    pub exec: Exec,
}

impl SaddleSystem {
    /// `C` is the `x` mass matrix on the trial nodes at `t = 0`.
    pub fn apply_c(&self, w: &[f64], out: &mut [f64]) {
        let nx = self.mesh.nx();
        let h = self.mesh.h();
        for j in 0..nx {
            let mut v = 2.0 * h / 3.0 * w[j];
            if j > 0 {
                v += h / 6.0 * w[j - 1];
            }
            if j + 1 < nx {
                v += h / 6.0 * w[j + 1];
            }
            out[j] += v;
        }
    }

    /// `y <- A_s^-1 y`, block by block.
    pub fn solve_a(&self, y: &mut [f64]) {
        let nx = self.mesh.nx();
        let blocks = &self.a_factored;
        self.exec.for_each_chunk_mut(y, 2 * nx, |c, chunk| blocks[c].solve_in_place(chunk));
    }

    pub fn apply_a(&self, z: &[f64], out: &mut [f64]) {
        let nx = self.mesh.nx();
        for (c, block) in self.a_raw.iter().enumerate() {
            let r = c * 2 * nx..(c + 1) * 2 * nx;
            block.mul(&z[r.clone()], &mut out[r]);
        }
    }

    /// `out <- (B^T A_s^-1 B + C) w`; `scratch` has test dimension.
    pub fn apply_schur(&self, w: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        self.b.apply(w, scratch, self.exec);
        self.solve_a(scratch);
        self.b.apply_transpose(scratch, out, self.exec);
        self.apply_c(w, out);
    }

    /// `B^T A_s^-1 g` for a test-space functional `g`.
    pub fn reduce_load(&self, g: &[f64]) -> Vec<f64> {
        let mut y = g.to_vec();
        self.solve_a(&mut y);
        let mut out = vec![0.0; self.mesh.trial_dim()];
        self.b.apply_transpose(&y, &mut out, self.exec);
        out
    }

    pub fn a_dense(&self) -> DMatrix<f64> {
        let nx = self.mesh.nx();
        let dim = self.mesh.test_dim();
        let mut out = DMatrix::zeros(dim, dim);
        for (c, block) in self.a_raw.iter().enumerate() {
            let off = c * 2 * nx;
            for r in 0..2 * nx {
                for s in 0..2 * nx {
                    out[(off + r, off + s)] = block.get(r, s);
                }
            }
        }
        out
    }

    pub fn c_dense(&self) -> DMatrix<f64> {
        let dim = self.mesh.trial_dim();
        let mut out = DMatrix::zeros(dim, dim);
        let mut e = vec![0.0; dim];
        let mut col = vec![0.0; dim];
        for j in 0..self.mesh.nx() {
            e[j] = 1.0;
            col.iter_mut().for_each(|v| *v = 0.0);
            self.apply_c(&e, &mut col);
            for i in 0..dim {
                out[(i, j)] = col[i];
            }
            e[j] = 0.0;
        }
        out
    }
}

/// Assembles `A_s`, `B` and `C` for drift `field` on unit time, end time `end_time`
/// and shift `lambda`. `B` encodes `int int d_t w z + T (d_x w d_x z - v^ d_x w z) + lambda w z`.
pub fn assemble(
    field: &dyn DriftField,
    end_time: f64,
    mesh: Mesh,
    lambda: f64,
    quad: &QuadratureOptions,
    exec: Exec,
) -> Result<SaddleSystem> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidProblem(format!("shift must be non-negative, got {lambda}")));
    }
    assemble_with(field, end_time, mesh, lambda, quad, exec, TestGram::SymmetricPart)
}

pub(crate) fn assemble_with(
    field: &dyn DriftField,
    end_time: f64,
    mesh: Mesh,
    lambda: f64,
    quad: &QuadratureOptions,
    exec: Exec,
    gram: TestGram,
) -> Result<SaddleSystem> {
    let n = mesh.n;
    let nx = mesh.nx();
    let h = mesh.h();
    let tt = end_time;
    let rule = gauss_legendre(quad.operator_order);

    let cells: Vec<(Vec<f64>, BandedSpd)> = exec.map_range(n, |c| {
        let mut bvals = vec![0.0; 6 * 2 * nx];
        let mut a = BandedSpd::zeros(2 * nx, TEST_BANDWIDTH);
        for e in 0..n {
            for (&tau, &wt) in rule.0.iter().zip(&rule.1) {
                let s = (c as f64 + tau) * h;
                let tv = [1.0 - tau, tau];
                let dtv = [-1.0 / h, 1.0 / h];
                let leg = [1.0, 2.0 * tau - 1.0];
                for (&xi, &wx) in rule.0.iter().zip(&rule.1) {
                    let x = (e as f64 + xi) * h;
                    let weight = h * h * wt * wx;
                    let v = field.vhat(s, x);
                    let xv = [1.0 - xi, xi];
                    let dxv = [-1.0 / h, 1.0 / h];
                    for jl in 0..2 {
                        let j = e + jl;
                        if j < 1 || j > nx {
                            continue;
                        }
                        for k in 0..2 {
                            let z = leg[k] * xv[jl];
                            let dz = leg[k] * dxv[jl];
                            let r = 2 * (j - 1) + k;
                            for a_ in 0..2 {
                                for jl2 in 0..2 {
                                    let jj = e + jl2;
                                    if jj < 1 || jj > nx {
                                        continue;
                                    }
                                    let phi = tv[a_] * xv[jl2];
                                    let phi_t = dtv[a_] * xv[jl2];
                                    let phi_x = tv[a_] * dxv[jl2];
                                    let val = phi_t * z + tt * phi_x * dz - tt * v * phi_x * z + lambda * phi * z;
                                    let d = jj + 1 - j;
                                    bvals[6 * r + 3 * a_ + d] += weight * val;
                                }
                            }
                            for jl2 in 0..2 {
                                let jj = e + jl2;
                                if jj < 1 || jj > nx {
                                    continue;
                                }
                                for l in 0..2 {
                                    let r2 = 2 * (jj - 1) + l;
                                    if r2 > r {
                                        continue;
                                    }
                                    let z2 = leg[l] * xv[jl2];
                                    let dz2 = leg[l] * dxv[jl2];
                                    let val = match gram {
                                        TestGram::SymmetricPart => {
                                            tt * dz * dz2 - 0.5 * tt * v * (dz * z2 + z * dz2) + lambda * z * z2
                                        }
                                        TestGram::Stiffness => dz * dz2,
                                    };
                                    a.add(r, r2, weight * val);
                                }
                            }
                        }
                    }
                }
            }
        }
        (bvals, a)
    });

    let mut vals = Vec::with_capacity(6 * mesh.test_dim());
    let mut a_raw = Vec::with_capacity(n);
    for (b, a) in cells {
        vals.extend_from_slice(&b);
        a_raw.push(a);
    }
    let factored: Vec<Result<BandedSpd>> = exec.map_slice(&a_raw, |a| {
        let mut f = a.clone();
        f.factor()?;
        Ok(f)
    });
    let a_factored = factored.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SaddleSystem {
        mesh,
        end_time,
        lambda,
        b: BlockOperator { mesh, vals },
        a_raw,
        a_factored,
        f: vec![0.0; mesh.test_dim()],
        exec,
    })
}

/// Quadrature point in `x`: coordinate, weight, cell.
type XPoint = (f64, f64, usize);

fn x_points(mesh: Mesh, rule: &(Vec<f64>, Vec<f64>), grade_first: Option<usize>) -> Vec<XPoint> {
    let h = mesh.h();
    let mut out = Vec::new();
    for e in 0..mesh.n {
        let (a, b) = (e as f64 * h, (e + 1) as f64 * h);
        match (e, grade_first) {
            (0, Some(levels)) => out.extend(graded(rule, a, b, levels).into_iter().map(|(x, w)| (x, w, e))),
            _ => out.extend(mapped(rule, a, b).map(|(x, w)| (x, w, e))),
        }
    }
    out
}

/// Integrates `sum_points weight * (g0 * z + g1 * d_x z)` against every test function,
/// where `integrand(t, x, u)` returns `(g0, g1)` and `u` comes from `u_grid`.
fn integrate_tests<U, I>(
    sys: &SaddleSystem,
    quad: &QuadratureOptions,
    grade: bool,
    u_grid: U,
    integrand: I,
) -> Result<Vec<f64>>
where
    U: Fn(&[f64], &[f64]) -> Result<Vec<f64>> + Sync,
    I: Fn(f64, f64, f64) -> (f64, f64) + Sync,
{
    let mesh = sys.mesh;
    let nx = mesh.nx();
    let h = mesh.h();
    let rule = gauss_legendre(quad.forcing_order);
    let xs_bulk = x_points(mesh, &rule, None);
    let xs_first = if grade { x_points(mesh, &rule, Some(quad.grading_levels)) } else { xs_bulk.clone() };

    let rows: Vec<Result<Vec<f64>>> = sys.exec.map_range(mesh.n, |c| {
        let (a, b) = (c as f64 * h, (c + 1) as f64 * h);
        let ts: Vec<(f64, f64)> =
            if c == 0 && grade { graded(&rule, a, b, quad.grading_levels) } else { mapped(&rule, a, b).collect() };
        let xs = if c == 0 { &xs_first } else { &xs_bulk };
        let t_coords: Vec<f64> = ts.iter().map(|p| p.0).collect();
        let x_coords: Vec<f64> = xs.iter().map(|p| p.0).collect();
        let u = u_grid(&t_coords, &x_coords)?;
        let mut out = vec![0.0; 2 * nx];
        for (it, &(t, wt)) in ts.iter().enumerate() {
            let tau = (t - a) / h;
            let leg = [1.0, 2.0 * tau - 1.0];
            for (ix, &(x, wx, e)) in xs.iter().enumerate() {
                let (g0, g1) = integrand(t, x, u[it * xs.len() + ix]);
                let xi = (x - e as f64 * h) / h;
                let xv = [1.0 - xi, xi];
                let dxv = [-1.0 / h, 1.0 / h];
                for jl in 0..2 {
                    let j = e + jl;
                    if j < 1 || j > nx {
                        continue;
                    }
                    for k in 0..2 {
                        out[2 * (j - 1) + k] += wt * wx * leg[k] * (g0 * xv[jl] + g1 * dxv[jl]);
                    }
                }
            }
        }
        Ok(out)
    });
    let mut f = Vec::with_capacity(mesh.test_dim());
    for r in rows {
        f.extend(r?);
    }
    Ok(f)
}

/// Load `f(z) = T int int u^ (-d_x v^ z - (v^ - v0) d_x z) e^{-lambda t}` with `u^`
/// supplied on tensor grids of unit times and states by `u_grid`.
pub fn assemble_rhs_with<U>(
    sys: &SaddleSystem,
    field: &dyn DriftField,
    v0: f64,
    quad: &QuadratureOptions,
    u_grid: U,
) -> Result<Vec<f64>>
where
    U: Fn(&[f64], &[f64]) -> Result<Vec<f64>> + Sync,
{
    let tt = sys.end_time;
    let lambda = sys.lambda;
    integrate_tests(sys, quad, true, u_grid, |t, x, u| {
        let scale = tt * u * (-lambda * t).exp();
        (-scale * field.vhat_dx(t, x), -scale * (field.vhat(t, x) - v0))
    })
}

/// Load for the constant-drift reference solution `refsol`; also stores it in `sys.f`.
pub fn assemble_rhs(
    sys: &mut SaddleSystem,
    refsol: &ConstDriftSolution,
    field: &dyn DriftField,
    quad: &QuadratureOptions,
) -> Result<Vec<f64>> {
    let tt = sys.end_time;
    let f = assemble_rhs_with(sys, field, refsol.v0, quad, |ts, xs| {
        let phys: Vec<f64> = ts.iter().map(|t| t * tt).collect();
        refsol.eval_grid(&phys, xs)
    })?;
    sys.f.clone_from(&f);
    Ok(f)
}

/// `int int g z` for every test function `z` (smooth `g`, no grading).
pub fn assemble_load(sys: &SaddleSystem, quad: &QuadratureOptions, g: impl Fn(f64, f64) -> f64 + Sync) -> Vec<f64> {
    integrate_tests(sys, quad, false, |ts, xs| Ok(vec![0.0; ts.len() * xs.len()]), |t, x, _| (g(t, x), 0.0))
        .expect("load integration cannot fail")
}

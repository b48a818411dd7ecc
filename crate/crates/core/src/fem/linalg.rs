//! Banded Cholesky and conjugate gradients.

use crate::{Error, Result};

/// Symmetric positive-definite band matrix stored by rows of its lower band.
#[derive(Clone, Debug)]
pub struct BandedSpd {
    n: usize,
    bw: usize,
    // row i holds entries (i, i - bw) ..= (i, i)
    data: Vec<f64>,
    factored: bool,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedSpd { n, bw, data: vec![0.0; n * (bw + 1)], factored: false }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + self.bw - (i - j)
    }

    /// Adds `v` to entry `(i, j)`; only the lower triangle is stored, so the caller
    /// adds each off-diagonal pair once.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        assert!(!self.factored);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let mut acc = 0.0;
            for j in lo..self.n.min(i + self.bw + 1) {
                acc += self.get(i, j) * x[j];
            }
            y[i] = acc;
        }
    }

    /// In-place `L L^T` factorization.
    pub fn factor(&mut self) -> Result<()> {
        let bw = self.bw;
        for i in 0..self.n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut s = self.data[self.slot(i, j)];
                let kl = lo.max(j.saturating_sub(bw));
                for k in kl..j {
                    s -= self.data[self.slot(i, k)] * self.data[self.slot(j, k)];
                }
                if j == i {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::Solver(format!("band matrix not positive definite at row {i}")));
                    }
                    let si = self.slot(i, i);
                    self.data[si] = s.sqrt();
                } else {
                    let sij = self.slot(i, j);
                    self.data[sij] = s / self.data[self.slot(j, j)];
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert!(self.factored);
        let bw = self.bw;
        for i in 0..self.n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.data[self.slot(i, k)] * b[k];
            }
            b[i] = s / self.data[self.slot(i, i)];
        }
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for k in i + 1..self.n.min(i + bw + 1) {
                s -= self.data[self.slot(k, i)] * b[k];
            }
            b[i] = s / self.data[self.slot(i, i)];
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Copy, Debug)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Conjugate gradients for `K x = b` starting from `x`; `apply(p, out)` writes `K p`.
/// Reductions run sequentially, so results do not depend on the thread count.
pub fn cg(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome { iterations: 0, relative_residual: 0.0 });
    }
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut p = r.clone();
    let mut kp = vec![0.0; n];
    let mut rr = dot(&r, &r);
    for it in 0..max_iter {
        if rr.sqrt() <= rel_tol * b_norm {
            return Ok(CgOutcome { iterations: it, relative_residual: rr.sqrt() / b_norm });
        }
        apply(&p, &mut kp);
        let pkp = dot(&p, &kp);
        if pkp <= 0.0 || !pkp.is_finite() {
            return Err(Error::Solver(format!("operator not positive definite (p^T K p = {pkp})")));
        }
        let alpha = rr / pkp;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * kp[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::Solver(format!(
        "conjugate gradients stalled at relative residual {:.3e} after {max_iter} iterations",
        rr.sqrt() / b_norm
    )))
}

//! Crank-Nicolson finite differences for `u_t = T (u_xx + v^ u_x) + g` on the unit square.

use crate::fem::DriftField;
use crate::refsol::ConstDriftSolution;
use crate::{Error, Result};

/// Number of implicit Euler half steps replacing the first Crank-Nicolson steps.
const RANNACHER_HALF_STEPS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CnConfig {
    pub nx: usize,
    pub nt: usize,
}

impl CnConfig {
    pub fn new(nx: usize, nt: usize) -> Result<Self> {
        if nx < 4 || nt < 4 {
            return Err(Error::InvalidProblem(format!("CN grid needs nx, nt >= 4, got {nx} x {nt}")));
        }
        Ok(CnConfig { nx, nt })
    }
}

/// Which problem to solve.
#[derive(Clone, Copy, Debug)]
pub enum CnMode<'a> {
    /// `u = 1` at `x = 0`, `u = 0` at `x = 1`, zero initial data.
    Full,
    /// Homogeneous data with the forcing `T (v^ - v0) d_x u(v0)` of the correction `e`.
    Correction(&'a ConstDriftSolution),
}

/// Solution at every time level, row-major in `(n, i)`.
#[derive(Clone, Debug)]
pub struct CnGrid {
    pub nx: usize,
    pub nt: usize,
    pub values: Vec<f64>,
}

impl CnGrid {
    pub fn at(&self, n: usize, i: usize) -> f64 {
        self.values[n * (self.nx + 1) + i]
    }

    pub fn level(&self, n: usize) -> &[f64] {
        &self.values[n * (self.nx + 1)..(n + 1) * (self.nx + 1)]
    }

    /// Piecewise linear value at the final time.
    pub fn final_value(&self, x: f64) -> f64 {
        let row = self.level(self.nt);
        let s = (x.clamp(0.0, 1.0) * self.nx as f64).min(self.nx as f64 - 1e-12);
        let i = s.floor() as usize;
        let w = s - i as f64;
        (1.0 - w) * row[i] + w * row[i + 1]
    }
}

/// Solves `A x = d` for tridiagonal `A` with sub, main and super diagonals.
pub fn thomas(sub: &[f64], main: &[f64], sup: &[f64], d: &mut [f64]) -> Result<()> {
    let m = main.len();
    let mut c = vec![0.0; m];
    let mut denom = main[0];
    for i in 0..m {
        if i > 0 {
            denom = main[i] - sub[i] * c[i - 1];
        }
        if denom.abs() < 1e-300 || !denom.is_finite() {
            return Err(Error::Solver(format!("tridiagonal pivot {denom} at row {i}")));
        }
        if i + 1 < m {
            c[i] = sup[i] / denom;
        }
        d[i] = if i == 0 { d[0] / denom } else { (d[i] - sub[i] * d[i - 1]) / denom };
    }
    for i in (0..m - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(())
}

/// Centred-difference Crank-Nicolson solve over unit time, started with implicit Euler half steps.
pub fn cn_solve(field: &dyn DriftField, end_time: f64, cfg: CnConfig, mode: CnMode<'_>) -> Result<CnGrid> {
    let (nx, nt) = (cfg.nx, cfg.nt);
    let dx = 1.0 / nx as f64;
    let dt = 1.0 / nt as f64;
    let xs: Vec<f64> = (0..=nx).map(|i| i as f64 * dx).collect();
    let left = match mode {
        CnMode::Full => 1.0,
        CnMode::Correction(_) => 0.0,
    };

    // spatial operator L u_i = T [ (u_{i+1} - 2 u_i + u_{i-1}) / dx^2 + v (u_{i+1} - u_{i-1}) / (2 dx) ]
    let coeffs = |t: f64, i: usize| {
        let v = field.vhat(t, xs[i]);
        let d = end_time / (dx * dx);
        let c = end_time * v / (2.0 * dx);
        (d - c, -2.0 * d, d + c)
    };
    let forcing = |t: f64, i: usize| -> Result<f64> {
        match mode {
            CnMode::Full => Ok(0.0),
            CnMode::Correction(rs) => {
                let x = xs[i];
                let dv = field.vhat(t, x) - rs.v0;
                if dv == 0.0 {
                    return Ok(0.0);
                }
                Ok(end_time * dv * rs.eval_dx(t * end_time, x)?)
            }
        }
    };

    let m = nx - 1;
    let mut values = vec![0.0; (nt + 1) * (nx + 1)];
    let mut u = vec![0.0; nx + 1];
    u[0] = left;
    values[..nx + 1].copy_from_slice(&u);

    let (mut sub, mut main, mut sup, mut rhs) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    // theta = 1 for implicit Euler, 1/2 for Crank-Nicolson
    let mut step = |u: &mut Vec<f64>, t0: f64, k: f64, theta: f64| -> Result<()> {
        let t1 = t0 + k;
        let tf = t0 + theta * k;
        for r in 0..m {
            let i = r + 1;
            let (lo1, di1, up1) = coeffs(t1, i);
            sub[r] = -theta * k * lo1;
            main[r] = 1.0 - theta * k * di1;
            sup[r] = -theta * k * up1;
            let mut b = u[i] + k * forcing(tf, i)?;
            if theta < 1.0 {
                let (lo0, di0, up0) = coeffs(t0, i);
                b += (1.0 - theta) * k * (lo0 * u[i - 1] + di0 * u[i] + up0 * u[i + 1]);
            }
            rhs[r] = b;
        }
        // boundary values at the new level are known
        rhs[0] += theta * k * coeffs(t1, 1).0 * left;
        thomas(&sub, &main, &sup, &mut rhs)?;
        u[1..nx].copy_from_slice(&rhs);
        u[0] = left;
        u[nx] = 0.0;
        Ok(())
    };

    let euler_levels = (RANNACHER_HALF_STEPS / 2).min(nt);
    for n in 1..=nt {
        let t = (n - 1) as f64 * dt;
        if n <= euler_levels {
            step(&mut u, t, 0.5 * dt, 1.0)?;
            step(&mut u, t + 0.5 * dt, 0.5 * dt, 1.0)?;
        } else {
            step(&mut u, t, dt, 0.5)?;
        }
        values[n * (nx + 1)..(n + 1) * (nx + 1)].copy_from_slice(&u);
    }
    Ok(CnGrid { nx, nt, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::ConstField;

    #[test]
    fn thomas_matches_direct() {
        let sub = [0.0, -1.0, -1.0, -1.0];
        let main = [4.0, 4.0, 4.0, 4.0];
        let sup = [-1.0, -1.0, -1.0, 0.0];
        let x = [1.0, -2.0, 0.5, 3.0];
        let mut d: Vec<f64> = (0..4)
            .map(|i| {
                main[i] * x[i]
                    + if i > 0 { sub[i] * x[i - 1] } else { 0.0 }
                    + if i < 3 { sup[i] * x[i + 1] } else { 0.0 }
            })
            .collect();
        thomas(&sub, &main, &sup, &mut d).unwrap();
        for (a, b) in d.iter().zip(x) {
            assert!((a - b).abs() < 1e-14);
        }
        let mut bad = vec![1.0, 1.0];
        assert!(thomas(&[0.0, 1.0], &[0.0, 1.0], &[1.0, 0.0], &mut bad).is_err());
    }

    #[test]
    fn steady_state_without_drift() {
        let g = cn_solve(&ConstField(0.0), 20.0, CnConfig::new(256, 256).unwrap(), CnMode::Full).unwrap();
        for i in 1..256 {
            let x = i as f64 / 256.0;
            assert!((g.at(256, i) - (1.0 - x)).abs() < 1e-4, "x {x}");
        }
    }

    #[test]
    fn matches_constant_drift_series() {
        let rs = ConstDriftSolution::new(2.0, 0.5);
        let g = cn_solve(&ConstField(2.0), 0.5, CnConfig::new(512, 512).unwrap(), CnMode::Full).unwrap();
        let exact = rs.eval(0.5, 0.5).unwrap();
        assert!((g.final_value(0.5) - exact).abs() < 5e-4, "{} vs {exact}", g.final_value(0.5));
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let rs = ConstDriftSolution::new(1.5, 0.8);
        let g = cn_solve(&ConstField(1.5), 0.8, CnConfig::new(32, 32).unwrap(), CnMode::Correction(&rs)).unwrap();
        assert!(g.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn correction_plus_reference_matches_full() {
        use crate::fem::FnField;
        let t_end = 0.6;
        let field = FnField { value: |t: f64, x: f64| 1.0 - 2.0 * x + t, dx: |_: f64, _: f64| -2.0 };
        let rs = ConstDriftSolution::new(1.0, t_end);
        let cfg = CnConfig::new(256, 256).unwrap();
        let full = cn_solve(&field, t_end, cfg, CnMode::Full).unwrap();
        let corr = cn_solve(&field, t_end, cfg, CnMode::Correction(&rs)).unwrap();
        for x in [0.2, 0.4, 0.6, 0.8] {
            let total = corr.final_value(x) + rs.eval(t_end, x).unwrap();
            assert!((total - full.final_value(x)).abs() < 2e-3, "x {x}");
        }
    }
}

//! Constant-drift reference solution.
//!
//! `u(v0)` solves `u_t = u_xx + v0 u_x` on `(0, T] x (0, 1)` with `u(t, 0) = 1`,
//! `u(t, 1) = 0` and `u(0, x) = 0`. The substitution
//! `u = exp(-v0 x / 2 - v0^2 t / 4) phi` turns it into the heat equation, which
//! gives two series: an eigenfunction expansion around the steady state that
//! converges fast for large `t`, and a method-of-images sum of drifted erfc
//! kernels that converges fast for small `t`.

use std::f64::consts::PI;

use crate::{Error, Result};

const TERM_CAP: usize = 10_000;
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Largest exponent of the cancellation factor `exp(|v0| / 2 - v0^2 t / 4)` for
/// which the eigenfunction series is still used.
const SPECTRAL_GROWTH_LIMIT: f64 = 5.0;

/// `erfc(x / (2 sqrt t))`, the heat layer emanating from a unit jump at `x = 0`.
pub fn u_heat_layer(t: f64, x: f64) -> f64 {
    libm::erfc(x / (2.0 * t.sqrt()))
}

/// Scaled complementary error function `exp(z^2) erfc(z)` for `z >= 0`.
fn erfcx(z: f64) -> f64 {
    if z < 8.0 {
        return (z * z).exp() * libm::erfc(z);
    }
    // asymptotic expansion; at z >= 8 the smallest term is far below f64 precision
    let r = 1.0 / (2.0 * z * z);
    let (mut sum, mut term) = (1.0, 1.0);
    for k in 1..100 {
        let next = -term * (2 * k - 1) as f64 * r;
        if next.abs() >= term.abs() || next.abs() < 1e-18 {
            break;
        }
        term = next;
        sum += term;
    }
    sum * FRAC_1_SQRT_PI / z
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    Spectral,
    Images,
}

/// `u(v0)` on `[0, T] x [0, 1]`.
#[derive(Clone, Copy, Debug)]
pub struct ConstDriftSolution {
    pub v0: f64,
    pub end_time: f64,
    pub spectral_tol: f64,
    pub t_cross: f64,
}

impl ConstDriftSolution {
    pub fn new(v0: f64, end_time: f64) -> Self {
        ConstDriftSolution { v0, end_time, spectral_tol: 1e-10, t_cross: 0.1 / (PI * PI) }
    }

    pub fn with_tol(mut self, spectral_tol: f64) -> Self {
        self.spectral_tol = spectral_tol;
        self
    }

    fn c(&self) -> f64 {
        0.5 * self.v0.abs()
    }

    /// Long-time limit `(exp(-v0 x) - exp(-v0)) / (1 - exp(-v0))`.
    pub fn steady(&self, x: f64) -> f64 {
        let v = self.v0;
        if v == 0.0 {
            1.0 - x
        } else if v > 0.0 {
            (-v * x).exp() * (-v * (1.0 - x)).exp_m1() / (-v).exp_m1()
        } else {
            (v * (1.0 - x)).exp_m1() / v.exp_m1()
        }
    }

    pub fn steady_dx(&self, x: f64) -> f64 {
        let v = self.v0;
        if v == 0.0 {
            -1.0
        } else if v > 0.0 {
            -v * (-v * x).exp() / (-(-v).exp_m1())
        } else {
            -v * (v * (1.0 - x)).exp() / v.exp_m1()
        }
    }

    /// Eigenfunction series is used from `t_cross` on, unless `|v0|` is so large that
    /// the series would cancel catastrophically.
    pub fn representation(&self, t: f64) -> Representation {
        let growth = self.c() - 0.25 * self.v0 * self.v0 * t;
        if t >= self.t_cross && growth <= SPECTRAL_GROWTH_LIMIT {
            Representation::Spectral
        } else {
            Representation::Images
        }
    }

    pub fn eval(&self, t: f64, x: f64) -> Result<f64> {
        if let Some(v) = self.trivial(t, x) {
            return Ok(v);
        }
        match self.representation(t) {
            Representation::Spectral => self.eval_spectral(t, x),
            Representation::Images => self.eval_images(t, x),
        }
    }

    pub fn eval_dx(&self, t: f64, x: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        match self.representation(t) {
            Representation::Spectral => {
                let k_max = self.spectral_terms(t)?;
                let (s, ds) = self.spectral_sum(t, k_max, |k| ((k as f64 * PI * x).sin(), (k as f64 * PI * x).cos()));
                let pref = (-0.5 * self.v0 * x).exp();
                Ok(self.steady_dx(x) + pref * (ds - 0.5 * self.v0 * s))
            }
            Representation::Images => {
                let (s, ds) = self.image_sums(t, x, true)?;
                Ok((-0.5 * self.v0 * x).exp() * (ds - 0.5 * self.v0 * s))
            }
        }
    }

    fn trivial(&self, t: f64, x: f64) -> Option<f64> {
        if t <= 0.0 {
            return Some(if x <= 0.0 { 1.0 } else { 0.0 });
        }
        if x <= 0.0 {
            return Some(1.0);
        }
        if x >= 1.0 {
            return Some(0.0);
        }
        None
    }

    fn decay(&self, k: usize, t: f64) -> f64 {
        let kp = k as f64 * PI;
        (-(kp * kp + 0.25 * self.v0 * self.v0) * t).exp()
    }

    fn coefficient(&self, k: usize) -> f64 {
        let kp = k as f64 * PI;
        -2.0 * kp / (0.25 * self.v0 * self.v0 + kp * kp)
    }

    /// Number of eigenmodes needed at time `t`, uniform in `x`.
    fn spectral_terms(&self, t: f64) -> Result<usize> {
        // worst case of the prefactor exp(-v0 x / 2) over x in [0, 1]
        let pref = (0.5 * (-self.v0).max(0.0)).exp();
        let target = self.spectral_tol / 10.0;
        for k in 1..TERM_CAP {
            let kp = k as f64 * PI;
            let term = pref * (2.0 / kp) * (-(kp * kp + 0.25 * self.v0 * self.v0) * t).exp();
            let ratio = (-((2 * k + 1) as f64) * PI * PI * t).exp();
            if term / (1.0 - ratio) < target {
                return Ok(k);
            }
        }
        Err(Error::SeriesNotConverged { t, x: f64::NAN, terms: TERM_CAP })
    }

    /// Returns `(sum c_k e_k(t) s_k, sum c_k e_k(t) k pi c_k)` where `basis(k)` gives
    /// `(sin(k pi x), cos(k pi x))`.
    fn spectral_sum(&self, t: f64, k_max: usize, basis: impl Fn(usize) -> (f64, f64)) -> (f64, f64) {
        let (mut s, mut ds) = (0.0, 0.0);
        for k in 1..=k_max {
            let a = self.coefficient(k) * self.decay(k, t);
            let (sn, cs) = basis(k);
            s += a * sn;
            ds += a * k as f64 * PI * cs;
        }
        (s, ds)
    }

    pub fn eval_spectral(&self, t: f64, x: f64) -> Result<f64> {
        if let Some(v) = self.trivial(t, x) {
            return Ok(v);
        }
        let k_max = self.spectral_terms(t)?;
        let s: f64 = (1..=k_max).map(|k| self.coefficient(k) * self.decay(k, t) * (k as f64 * PI * x).sin()).sum();
        Ok(self.steady(x) + (-0.5 * self.v0 * x).exp() * s)
    }

    /// `G(a) = [exp(-a c) erfc(a / 2 sqrt t - c sqrt t) + exp(a c) erfc(a / 2 sqrt t + c sqrt t)] / 2`
    /// and its derivative in `a`, evaluated without overflow.
    fn kernel(&self, t: f64, a: f64) -> (f64, f64) {
        let c = self.c();
        let st = t.sqrt();
        let zm = a / (2.0 * st) - c * st;
        let zp = a / (2.0 * st) + c * st;
        let gauss = (-a * a / (4.0 * t) - c * c * t).exp();
        let plus = gauss * erfcx(zp);
        let minus = if zm >= 0.0 { gauss * erfcx(zm) } else { (-a * c).exp() * libm::erfc(zm) };
        let g = 0.5 * (minus + plus);
        let dg = 0.5 * c * (plus - minus) - gauss * FRAC_1_SQRT_PI / st;
        (g, dg)
    }

    /// Bound on `G` and `G'` for image distance `a`, once `a` is past the drift front.
    fn kernel_bound(&self, t: f64, a: f64) -> Option<f64> {
        let c = self.c();
        if a < 2.0 * c * t {
            return None;
        }
        let gauss = (-a * a / (4.0 * t) - c * c * t).exp();
        Some(gauss * (1.0 + c + FRAC_1_SQRT_PI / t.sqrt()))
    }

    /// `(S, S')` with `S = sum_{n>=0} G(x + 2n) - sum_{m>=1} G(2m - x)`.
    fn image_sums(&self, t: f64, x: f64, with_dx: bool) -> Result<(f64, f64)> {
        let pref = (-0.5 * self.v0 * x).exp();
        let target = self.spectral_tol / 10.0;
        let (g, dg) = self.kernel(t, x);
        let (mut s, mut ds) = (g, dg);
        for n in 1..TERM_CAP {
            let a_pos = x + 2.0 * n as f64;
            let a_neg = 2.0 * n as f64 - x;
            let (gp, dgp) = self.kernel(t, a_pos);
            let (gn, dgn) = self.kernel(t, a_neg);
            s += gp - gn;
            if with_dx {
                ds += dgp + dgn;
            }
            // the next pair is bounded by the kernel at the nearer image
            if let Some(bound) = self.kernel_bound(t, a_neg + 2.0) {
                if 2.0 * pref * bound < target {
                    return Ok((s, ds));
                }
            }
        }
        Err(Error::SeriesNotConverged { t, x, terms: TERM_CAP })
    }

    pub fn eval_images(&self, t: f64, x: f64) -> Result<f64> {
        if let Some(v) = self.trivial(t, x) {
            return Ok(v);
        }
        let (s, _) = self.image_sums(t, x, false)?;
        Ok((-0.5 * self.v0 * x).exp() * s)
    }

    /// Values on a tensor grid, row-major in `times`. Entry `(i, j)` equals
    /// `eval(times[i], xs[j])` exactly; the sine table is shared across rows.
    pub fn eval_grid(&self, times: &[f64], xs: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; times.len() * xs.len()];
        let mut sines: Vec<Vec<f64>> = vec![Vec::new(); xs.len()];
        let steady: Vec<f64> = xs.iter().map(|&x| self.steady(x)).collect();
        let prefs: Vec<f64> = xs.iter().map(|&x| (-0.5 * self.v0 * x).exp()).collect();
        let mut coeffs = Vec::new();
        for (i, &t) in times.iter().enumerate() {
            let row = &mut out[i * xs.len()..(i + 1) * xs.len()];
            if t > 0.0 && self.representation(t) == Representation::Spectral {
                let k_max = self.spectral_terms(t)?;
                coeffs.clear();
                coeffs.extend((1..=k_max).map(|k| self.coefficient(k) * self.decay(k, t)));
                for (j, &x) in xs.iter().enumerate() {
                    if let Some(v) = self.trivial(t, x) {
                        row[j] = v;
                        continue;
                    }
                    let table = &mut sines[j];
                    while table.len() < k_max {
                        let k = table.len() + 1;
                        table.push((k as f64 * PI * x).sin());
                    }
                    let s: f64 = coeffs.iter().zip(table.iter()).map(|(a, b)| a * b).sum();
                    row[j] = steady[j] + prefs[j] * s;
                }
            } else {
                for (j, &x) in xs.iter().enumerate() {
                    row[j] = self.eval(t, x)?;
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// erfc from the Maclaurin series of erf (small z) or a continued fraction (large z).
    fn erfc_oracle(z: f64) -> f64 {
        if z < 2.5 {
            let mut term = z;
            let mut sum = z;
            for n in 1..200 {
                term *= -z * z / n as f64;
                sum += term / (2 * n + 1) as f64;
            }
            1.0 - 2.0 / PI.sqrt() * sum
        } else {
            let mut f = 0.0;
            for k in (1..200).rev() {
                f = (k as f64 / 2.0) / (z + f);
            }
            (-z * z).exp() / PI.sqrt() / (z + f)
        }
    }

    #[test]
    fn heat_layer_values() {
        assert_eq!(u_heat_layer(0.01, 0.0), 1.0);
        assert!((u_heat_layer(0.01, 0.1) - 0.4795001222).abs() < 1e-10);
        assert!((u_heat_layer(0.01, 0.1) - erfc_oracle(0.5)).abs() < 1e-14);
        assert!(u_heat_layer(0.01, 10.0) < 1e-300);
        for z in [0.1, 0.9, 1.7, 3.0, 4.5, 6.0] {
            let rel = (libm::erfc(z) - erfc_oracle(z)).abs() / erfc_oracle(z);
            assert!(rel < 1e-13, "z = {z}: rel {rel}");
        }
    }

    #[test]
    fn erfcx_is_continuous_at_switch() {
        let below = erfcx(8.0 - 1e-12);
        let above = erfcx(8.0);
        assert!((below - above).abs() < 1e-14);
        let oracle = erfc_oracle(9.0) * (9.0f64 * 9.0).exp();
        assert!((erfcx(9.0) - oracle).abs() < 1e-14 * oracle);
    }

    #[test]
    fn spectral_coefficients_match_quadrature() {
        for v0 in [-3.0, 0.0, 2.5] {
            let s = ConstDriftSolution::new(v0, 1.0);
            for k in 1..5 {
                // c_k = 2 int_0^1 -exp(v0 x / 2) u_s(x) sin(k pi x) dx, midpoint rule
                let m = 200_000;
                let h = 1.0 / m as f64;
                let quad: f64 = (0..m)
                    .map(|i| {
                        let x = (i as f64 + 0.5) * h;
                        -2.0 * (0.5 * v0 * x).exp() * s.steady(x) * (k as f64 * PI * x).sin() * h
                    })
                    .sum();
                assert!((quad - s.coefficient(k)).abs() < 1e-8, "v0 {v0} k {k}");
            }
        }
    }

    #[test]
    fn documented_values() {
        let s0 = ConstDriftSolution::new(0.0, 20.0);
        assert!((s0.eval(10.0, 0.5).unwrap() - 0.5).abs() < 1e-12);
        assert!((s0.eval(0.01, 0.1).unwrap() - 0.4795001222).abs() < 1e-8);
        let s2 = ConstDriftSolution::new(2.0, 20.0);
        assert!((s2.eval(10.0, 0.5).unwrap() - 0.2689414214).abs() < 1e-10);
        let gr = ((-1f64).exp() - (-2f64).exp()) / (1.0 - (-2f64).exp());
        assert!((s2.steady(0.5) - gr).abs() < 1e-15);
    }

    #[test]
    fn representations_agree_on_overlap() {
        for v0 in [-4.0, -1.0, 0.0, 1.0, 4.0] {
            let s = ConstDriftSolution::new(v0, 1.0);
            for i in 0..=8 {
                let t = s.t_cross * 2f64.powf(-1.0 + 2.0 * i as f64 / 8.0);
                for j in 0..=10 {
                    let x = j as f64 / 10.0;
                    let a = s.eval_spectral(t, x).unwrap();
                    let b = s.eval_images(t, x).unwrap();
                    assert!((a - b).abs() <= 1e-8, "v0 {v0} t {t} x {x}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn boundary_and_initial_values() {
        for v0 in [-6.0, -1.0, 0.0, 3.0, 8.0] {
            let s = ConstDriftSolution::new(v0, 2.0);
            for t in [1e-4, 1e-3, 1e-2, 0.1, 1.0, 2.0] {
                assert!((s.eval(t, 0.0).unwrap() - 1.0).abs() <= s.spectral_tol);
                assert!(s.eval(t, 1.0).unwrap().abs() <= s.spectral_tol);
                // the series themselves, not just the short cut
                assert!((s.eval_images(t, 1e-300).unwrap() - 1.0).abs() <= s.spectral_tol);
                assert!(s.eval_images(t, 1.0 - 1e-16).unwrap().abs() <= 10.0 * s.spectral_tol);
            }
            for x in [0.1, 0.5, 0.9] {
                assert!(s.eval(1e-6, x).unwrap() <= 1e-10);
            }
        }
    }

    #[test]
    fn large_drift_stays_bounded() {
        for v0 in [-40.0, -15.0, 15.0, 40.0] {
            let s = ConstDriftSolution::new(v0, 3.0);
            for t in [1e-3, 0.02, 0.2, 3.0] {
                for j in 0..=20 {
                    let u = s.eval(t, j as f64 / 20.0).unwrap();
                    assert!((-1e-9..=1.0 + 1e-9).contains(&u), "v0 {v0} t {t}: {u}");
                }
            }
        }
    }

    #[test]
    fn derivative_matches_differences() {
        for v0 in [-4.0, 0.0, 2.0] {
            let s = ConstDriftSolution::new(v0, 1.0);
            for t in [0.003, 0.05, 0.5] {
                for x in [0.05, 0.3, 0.7, 0.95] {
                    let h = 1e-5;
                    let fd = (s.eval(t, x + h).unwrap() - s.eval(t, x - h).unwrap()) / (2.0 * h);
                    let d = s.eval_dx(t, x).unwrap();
                    assert!((fd - d).abs() < 1e-6 * (1.0 + d.abs()), "v0 {v0} t {t} x {x}: {d} vs {fd}");
                }
            }
        }
    }

    #[test]
    fn pde_residual_is_small() {
        let s = ConstDriftSolution::new(1.5, 1.0);
        let h = 1e-4;
        for &(t, x) in &[(0.02, 0.4), (0.2, 0.6), (0.7, 0.2)] {
            let u = |t, x| s.eval(t, x).unwrap();
            let ut = (u(t + h, x) - u(t - h, x)) / (2.0 * h);
            let uxx = (u(t, x + h) - 2.0 * u(t, x) + u(t, x - h)) / (h * h);
            let ux = s.eval_dx(t, x).unwrap();
            assert!((ut - uxx - 1.5 * ux).abs() < 1e-4);
        }
    }

    #[test]
    fn grid_matches_pointwise_and_symmetry() {
        let s = ConstDriftSolution::new(0.0, 1.0);
        let g = s.eval_grid(&[0.1, 0.2], &[0.25, 0.75]).unwrap();
        // u(t, x) + u(t, 1 - x) has unit Dirichlet data on both sides and zero initial
        // data, so it equals 1 minus the decaying odd sine series of the unit step.
        for (i, t) in [0.1f64, 0.2].into_iter().enumerate() {
            let decay: f64 = (0..200)
                .map(|m| {
                    let k = (2 * m + 1) as f64;
                    4.0 / (k * PI) * (-k * k * PI * PI * t).exp() * (k * PI * 0.25).sin()
                })
                .sum();
            assert!((g[2 * i] + g[2 * i + 1] - (1.0 - decay)).abs() < 1e-10);
        }
        let one = s.eval_grid(&[0.3], &[0.4]).unwrap();
        assert_eq!(one[0], s.eval(0.3, 0.4).unwrap());

        let s = ConstDriftSolution::new(-2.5, 1.0);
        let times = [0.0, 1e-3, 0.005, 0.02, 0.3, 1.0];
        let xs: Vec<f64> = (0..=16).map(|j| j as f64 / 16.0).collect();
        let g = s.eval_grid(&times, &xs).unwrap();
        for (i, &t) in times.iter().enumerate() {
            for (j, &x) in xs.iter().enumerate() {
                assert_eq!(g[i * xs.len() + j], s.eval(t, x).unwrap());
            }
            let row = &g[i * xs.len()..(i + 1) * xs.len()];
            assert!(row.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        }
    }

    proptest! {
        #[test]
        fn bounded_and_monotone(v0 in -10.0f64..10.0, t in 1e-4f64..2.0, x in 0.0f64..1.0, dx in 1e-3f64..0.2) {
            let s = ConstDriftSolution::new(v0, 2.0);
            let u = s.eval(t, x).unwrap();
            prop_assert!((-1e-10..=1.0 + 1e-10).contains(&u));
            let u2 = s.eval(t, (x + dx).min(1.0)).unwrap();
            prop_assert!(u2 <= u + 1e-10);
        }
    }
}

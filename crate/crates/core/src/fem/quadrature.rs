//! Gauss-Legendre rules on intervals, plain and geometrically graded.

use std::f64::consts::PI;

/// `m`-point Gauss-Legendre rule on `[0, 1]` as `(nodes, weights)`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if m == 1 { z } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = 0.5 * (1.0 - z);
        nodes[m - 1 - i] = 0.5 * (1.0 + z);
        weights[i] = 0.5 * w;
        weights[m - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Points and weights of `rule` mapped to `[a, b]`.
pub fn mapped(rule: &(Vec<f64>, Vec<f64>), a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
    let len = b - a;
    rule.0.iter().zip(&rule.1).map(move |(&x, &w)| (a + len * x, len * w))
}

/// Composite rule on `[a, b]` graded geometrically towards `a`: subintervals
/// `[a + len 2^-(l+1), a + len 2^-l]` for `l < levels` plus `[a, a + len 2^-levels]`.
pub fn graded(rule: &(Vec<f64>, Vec<f64>), a: f64, b: f64, levels: usize) -> Vec<(f64, f64)> {
    let len = b - a;
    let mut out = Vec::with_capacity((levels + 1) * rule.0.len());
    let mut hi = 1.0;
    for _ in 0..levels {
        let lo = 0.5 * hi;
        out.extend(mapped(rule, a + len * lo, a + len * hi));
        hi = lo;
    }
    out.extend(mapped(rule, a, a + len * hi));
    out
}

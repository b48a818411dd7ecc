//! Euler-Maruyama estimate of the probability of leaving through the lower boundary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::geometry::FpProblem;
use crate::{Error, Exec, Result};

/// Paths per independently seeded stream.
pub const CHUNK_PATHS: usize = 8192;

/// Crossing probabilities below this are not sampled.
const BRIDGE_CUTOFF: f64 = 40.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McConfig {
    pub paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub bridge: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { paths: 200_000, dt: 1e-4, seed: 0x5eed, bridge: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub p: f64,
    pub se: f64,
    pub hits: u64,
    pub paths: usize,
}

/// Fraction of paths of `dX = mu dt + sigma dW`, `X(0) = y`, that reach the lower
/// boundary before the upper one and before the horizon.
///
/// Paths are split into chunks of [`CHUNK_PATHS`], chunk `k` drawing from the
/// ChaCha8 stream `k` of `seed`, so the result does not depend on `exec`.
pub fn mc_first_hit(p: &FpProblem, y: f64, cfg: &McConfig, exec: Exec) -> Result<McEstimate> {
    if cfg.paths == 0 || !(cfg.dt > 0.0) {
        return Err(Error::InvalidProblem(format!("MC needs paths >= 1 and dt > 0, got {} and {}", cfg.paths, cfg.dt)));
    }
    let chunks = cfg.paths.div_ceil(CHUNK_PATHS);
    let hits: u64 = exec
        .map_range(chunks, |k| {
            let count = CHUNK_PATHS.min(cfg.paths - k * CHUNK_PATHS);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k as u64);
            (0..count).filter(|_| lower_first(p, y, cfg, &mut rng)).count() as u64
        })
        .into_iter()
        .sum();
    let n = cfg.paths as f64;
    let phat = hits as f64 / n;
    Ok(McEstimate { p: phat, se: (phat * (1.0 - phat) / n).sqrt(), hits, paths: cfg.paths })
}

fn lower_first(p: &FpProblem, y: f64, cfg: &McConfig, rng: &mut ChaCha8Rng) -> bool {
    let (mut lo, mut hi) = (p.lower.value(0.0), p.upper.value(0.0));
    if y <= lo {
        return true;
    }
    if y >= hi {
        return false;
    }
    let var_rate = p.sigma * p.sigma;
    let (mut t, mut x) = (0.0, y);
    while t < p.horizon {
        let k = cfg.dt.min(p.horizon - t);
        let z: f64 = rng.sample(StandardNormal);
        let x1 = x + p.drift.value(t, x) * k + p.sigma * k.sqrt() * z;
        let t1 = t + k;
        let (lo1, hi1) = (p.lower.value(t1), p.upper.value(t1));
        if x1 <= lo1 {
            return true;
        }
        if x1 >= hi1 {
            return false;
        }
        if cfg.bridge {
            // crossing probability of a Brownian bridge against the chord of each boundary
            let e_lo = 2.0 * (x - lo) * (x1 - lo1) / (var_rate * k);
            if e_lo < BRIDGE_CUTOFF && rng.random::<f64>() < (-e_lo).exp() {
                return true;
            }
            let e_hi = 2.0 * (hi - x) * (hi1 - x1) / (var_rate * k);
            if e_hi < BRIDGE_CUTOFF && rng.random::<f64>() < (-e_hi).exp() {
                return false;
            }
        }
        t = t1;
        x = x1;
        lo = lo1;
        hi = hi1;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Boundary, Drift};

    fn strip(mu: f64, horizon: f64) -> FpProblem {
        FpProblem::new(Drift::constant(mu), 1.0, Boundary::constant(0.0), Boundary::constant(1.0), horizon).unwrap()
    }

    fn cfg(paths: usize, dt: f64) -> McConfig {
        McConfig { paths, dt, seed: 17, bridge: true }
    }

    #[test]
    fn start_on_boundary() {
        let p = strip(0.3, 1.0);
        let e = mc_first_hit(&p, 0.0, &cfg(100, 1e-3), Exec::Sequential).unwrap();
        assert_eq!(e.p, 1.0);
        let e = mc_first_hit(&p, 1.0, &cfg(100, 1e-3), Exec::Sequential).unwrap();
        assert_eq!(e.p, 0.0);
    }

    #[test]
    fn symmetric_zero_drift() {
        let e = mc_first_hit(&strip(0.0, 50.0), 0.5, &cfg(200_000, 1e-3), Exec::Parallel).unwrap();
        assert!((e.p - 0.5).abs() <= 3.0 * e.se, "{e:?}");
    }

    #[test]
    fn gamblers_ruin() {
        let exact = ((-1f64).exp() - (-2f64).exp()) / (1.0 - (-2f64).exp());
        let e = mc_first_hit(&strip(1.0, 50.0), 0.5, &cfg(100_000, 1e-3), Exec::Parallel).unwrap();
        // bridge-corrected Euler bias is well below sqrt(dt)
        assert!((e.p - exact).abs() <= 3.0 * e.se + 1e-3f64.sqrt() * 0.1, "{e:?} vs {exact}");
    }

    #[test]
    fn reproducible_across_exec() {
        let p = strip(0.7, 2.0);
        let c = cfg(20_000, 1e-3);
        let a = mc_first_hit(&p, 0.4, &c, Exec::Sequential).unwrap();
        let b = mc_first_hit(&p, 0.4, &c, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bridge_raises_absorption() {
        let p = strip(0.0, 0.5);
        let with = mc_first_hit(&p, 0.2, &cfg(40_000, 1e-2), Exec::Parallel).unwrap();
        let without = mc_first_hit(&p, 0.2, &McConfig { bridge: false, ..cfg(40_000, 1e-2) }, Exec::Parallel).unwrap();
        assert!(with.p > without.p + 2.0 * with.se);
    }
}

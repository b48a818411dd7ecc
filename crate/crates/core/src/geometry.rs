//! Moving-boundary problems and their transformation to the unit square.
//!
//! A backward Kolmogorov problem on `alpha(t) < x < beta(t)` is first
//! time-reversed and rescaled ([`to_tilde`]) so that the diffusion coefficient
//! is one, then straightened by the time change `theta' = (b(theta) - a(theta))^2`
//! ([`solve_time_change`]) and the affine map `x -> (x - a) / (b - a)`
//! ([`transform_drift`]). The result is a drift field on `[0, T] x [0, 1]`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type FieldFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Number of samples used when a general boundary pair is checked for overlap.
const OVERLAP_SAMPLES: usize = 2048;

/// A time-dependent boundary curve together with its derivative.
///
/// Affine curves are kept symbolic so that the time change can use its closed form.
#[derive(Clone)]
pub enum Boundary {
    Affine { intercept: f64, slope: f64 },
    General { value: ScalarFn, derivative: ScalarFn },
}

impl Boundary {
    pub fn constant(c: f64) -> Self {
        Boundary::Affine { intercept: c, slope: 0.0 }
    }

    pub fn affine(intercept: f64, slope: f64) -> Self {
        Boundary::Affine { intercept, slope }
    }

    pub fn general(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Boundary::General { value: Arc::new(value), derivative: Arc::new(derivative) }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Boundary::Affine { intercept, slope } => intercept + slope * t,
            Boundary::General { value, .. } => value(t),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Boundary::Affine { slope, .. } => *slope,
            Boundary::General { derivative, .. } => derivative(t),
        }
    }

    /// The curve `s -> self(scale * (offset - s))`.
    fn reversed(&self, scale: f64, offset: f64) -> Boundary {
        match self {
            Boundary::Affine { intercept, slope } => {
                Boundary::Affine { intercept: intercept + slope * scale * offset, slope: -slope * scale }
            }
            Boundary::General { value, derivative } => {
                let (v, d) = (value.clone(), derivative.clone());
                Boundary::General {
                    value: Arc::new(move |s| v(scale * (offset - s))),
                    derivative: Arc::new(move |s| -scale * d(scale * (offset - s))),
                }
            }
        }
    }
}

impl fmt::Debug for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Affine { intercept, slope } => {
                f.debug_struct("Affine").field("intercept", intercept).field("slope", slope).finish()
            }
            Boundary::General { .. } => f.write_str("General"),
        }
    }
}

/// Drift `mu(t, x)` with its state derivative.
#[derive(Clone)]
pub struct Drift {
    value: FieldFn,
    dx: FieldFn,
}

impl Drift {
    pub fn new(
        value: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        dx: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Drift { value: Arc::new(value), dx: Arc::new(dx) }
    }

    pub fn constant(c: f64) -> Self {
        Drift::new(move |_, _| c, |_, _| 0.0)
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        (self.value)(t, x)
    }

    pub fn dx(&self, t: f64, x: f64) -> f64 {
        (self.dx)(t, x)
    }

    fn rescaled(&self, factor: f64, time_scale: f64, offset: f64) -> Drift {
        let (v, d) = (self.value.clone(), self.dx.clone());
        Drift::new(
            move |s, x| factor * v(time_scale * (offset - s), x),
            move |s, x| factor * d(time_scale * (offset - s), x),
        )
    }

    fn scaled(&self, factor: f64) -> Drift {
        let (v, d) = (self.value.clone(), self.dx.clone());
        Drift::new(move |t, x| factor * v(t, x), move |t, x| factor * d(t, x))
    }
}

impl fmt::Debug for Drift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Drift")
    }
}

/// How the noise amplitude enters the backward equation.
///
/// `PaperCompat` reads the generator as `(sigma/2) d_xx + mu d_x`, which is the
/// published substitution; `SdeConsistent` uses `(sigma^2/2) d_xx + mu d_x`, the
/// generator of `dX = mu dt + sigma dW`. Both coincide in `T~` when `sigma = 1`
/// but differ by a factor two in the drift.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Convention {
    #[default]
    PaperCompat,
    SdeConsistent,
}

impl Convention {
    /// Factor `kappa` in `t_original = kappa * (T~ - t~)`.
    pub fn time_factor(self, sigma: f64) -> f64 {
        match self {
            Convention::PaperCompat => 2.0 / sigma,
            Convention::SdeConsistent => 2.0 / (sigma * sigma),
        }
    }

    pub fn drift_factor(self, sigma: f64) -> f64 {
        match self {
            Convention::PaperCompat => 1.0,
            Convention::SdeConsistent => 2.0 / (sigma * sigma),
        }
    }

    pub fn tilde_horizon(self, sigma: f64, tau: f64) -> f64 {
        tau / self.time_factor(sigma)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Convention::PaperCompat => "paper-compat",
            Convention::SdeConsistent => "sde-consistent",
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "paper-compat" => Ok(Convention::PaperCompat),
            "sde-consistent" => Ok(Convention::SdeConsistent),
            other => Err(Error::InvalidProblem(format!("unknown convention `{other}`"))),
        }
    }
}

/// The original first-passage model `dX = mu(t, X) dt + sigma dW` between
/// `alpha(t)` and `beta(t)` up to the horizon `tau`.
#[derive(Clone, Debug)]
pub struct FpProblem {
    pub drift: Drift,
    pub sigma: f64,
    pub lower: Boundary,
    pub upper: Boundary,
    pub horizon: f64,
}

impl FpProblem {
    pub fn new(drift: Drift, sigma: f64, lower: Boundary, upper: Boundary, horizon: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidProblem(format!("sigma must be positive, got {sigma}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidProblem(format!("horizon must be positive, got {horizon}")));
        }
        check_ordered(&lower, &upper, horizon)?;
        Ok(FpProblem { drift, sigma, lower, upper, horizon })
    }

    /// The SDE whose generator is the backward operator implied by `convention`.
    ///
    /// For `SdeConsistent` this is the problem itself. Under `PaperCompat` the
    /// generator `(sigma/2) d_xx + mu d_x` belongs to the diffusion with noise
    /// `sqrt(sigma)` and drift `mu`, which after the time rescaling used by the
    /// transformation amounts to drift `sigma * mu / 2`.
    pub fn equivalent_sde(&self, convention: Convention) -> FpProblem {
        match convention {
            Convention::SdeConsistent => self.clone(),
            Convention::PaperCompat => {
                FpProblem { drift: self.drift.scaled(0.5 * self.sigma), sigma: self.sigma.sqrt(), ..self.clone() }
            }
        }
    }
}

fn check_ordered(lower: &Boundary, upper: &Boundary, end: f64) -> Result<()> {
    let check = |t: f64| {
        let (a, b) = (lower.value(t), upper.value(t));
        if a < b {
            Ok(())
        } else {
            Err(Error::BoundariesMeet { time: t, lower: a, upper: b })
        }
    };
    match (lower, upper) {
        // The gap of two affine curves is affine: endpoints decide.
        (Boundary::Affine { .. }, Boundary::Affine { .. }) => {
            check(0.0)?;
            check(end)
        }
        _ => (0..=OVERLAP_SAMPLES).try_for_each(|k| check(end * k as f64 / OVERLAP_SAMPLES as f64)),
    }
}

/// Problem on the moving domain `a(t~) < x~ < b(t~)` with unit diffusion.
#[derive(Clone, Debug)]
pub struct TildeProblem {
    pub lower: Boundary,
    pub upper: Boundary,
    pub drift: Drift,
    pub horizon: f64,
}

impl TildeProblem {
    pub fn new(lower: Boundary, upper: Boundary, drift: Drift, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidProblem(format!("horizon must be positive, got {horizon}")));
        }
        check_ordered(&lower, &upper, horizon)?;
        Ok(TildeProblem { lower, upper, drift, horizon })
    }

    pub fn width(&self, s: f64) -> f64 {
        self.upper.value(s) - self.lower.value(s)
    }

    /// `xi(t~, x) = (1 - x) a(t~) + x b(t~)`.
    pub fn xi(&self, s: f64, x: f64) -> f64 {
        (1.0 - x) * self.lower.value(s) + x * self.upper.value(s)
    }
}

/// Time-reverses and rescales `p` onto the unit-diffusion form.
pub fn to_tilde(p: &FpProblem, convention: Convention) -> Result<TildeProblem> {
    let kappa = convention.time_factor(p.sigma);
    let horizon = convention.tilde_horizon(p.sigma, p.horizon);
    let drift = p.drift.rescaled(convention.drift_factor(p.sigma), kappa, horizon);
    TildeProblem::new(p.lower.reversed(kappa, horizon), p.upper.reversed(kappa, horizon), drift, horizon)
}

/// Integration controls for the time-change ODE.
#[derive(Clone, Copy, Debug)]
pub struct TimeChangeOptions {
    pub ode_tol: f64,
    /// Give up when `theta` has not reached `T~` by this time.
    pub max_span: f64,
    /// Largest increment of `theta` per accepted step, as a fraction of `T~`.
    pub max_theta_step: f64,
}

impl Default for TimeChangeOptions {
    fn default() -> Self {
        TimeChangeOptions { ode_tol: 1e-10, max_span: 1e6, max_theta_step: 1.0 / 512.0 }
    }
}

/// Solution of `theta' = (b(theta) - a(theta))^2`, `theta(0) = 0`, on `[0, T]`
/// where `theta(T) = T~`.
#[derive(Clone, Debug)]
pub enum TimeChange {
    /// Closed form for affine boundaries: gap `w0 + w1 * s`.
    Affine {
        w0: f64,
        w1: f64,
        end: f64,
        tilde_end: f64,
    },
    Sampled(SampledTimeChange),
}

impl TimeChange {
    pub fn end_time(&self) -> f64 {
        match self {
            TimeChange::Affine { end, .. } => *end,
            TimeChange::Sampled(s) => s.end(),
        }
    }

    pub fn tilde_end(&self) -> f64 {
        match self {
            TimeChange::Affine { tilde_end, .. } => *tilde_end,
            TimeChange::Sampled(s) => *s.thetas.last().unwrap(),
        }
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self, TimeChange::Affine { .. })
    }

    pub fn theta(&self, t: f64) -> f64 {
        match *self {
            TimeChange::Affine { w0, w1, .. } => w0 * w0 * t / (1.0 - w0 * w1 * t),
            TimeChange::Sampled(ref s) => s.theta(t),
        }
    }

    pub fn theta_prime(&self, t: f64) -> f64 {
        match *self {
            TimeChange::Affine { w0, w1, .. } => {
                let d = 1.0 - w0 * w1 * t;
                w0 * w0 / (d * d)
            }
            TimeChange::Sampled(ref s) => s.theta_prime(t),
        }
    }

    pub fn inverse(&self, s: f64) -> f64 {
        match *self {
            TimeChange::Affine { w0, w1, .. } => s / (w0 * (w0 + w1 * s)),
            TimeChange::Sampled(ref sc) => sc.inverse(s),
        }
    }
}

/// Accepted Runge-Kutta steps with cubic Hermite interpolation between them.
#[derive(Clone, Debug)]
pub struct SampledTimeChange {
    ts: Vec<f64>,
    thetas: Vec<f64>,
    slopes: Vec<f64>,
    lower: Boundary,
    upper: Boundary,
}

impl SampledTimeChange {
    pub fn end(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    pub fn nodes(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.ts, &self.thetas, &self.slopes)
    }

    fn segment(&self, t: f64) -> usize {
        let k = self.ts.partition_point(|&s| s <= t);
        k.clamp(1, self.ts.len() - 1) - 1
    }

    fn hermite(&self, k: usize, t: f64) -> (f64, f64) {
        let (t0, t1) = (self.ts[k], self.ts[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (y0, y1, m0, m1) = (self.thetas[k], self.thetas[k + 1], self.slopes[k] * h, self.slopes[k + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let value =
            (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * m1;
        let deriv = ((6.0 * s2 - 6.0 * s) * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * m1)
            / h;
        (value, deriv)
    }

    pub fn theta(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.end());
        self.hermite(self.segment(t), t).0
    }

    /// The ODE right-hand side at the interpolated `theta`.
    pub fn theta_prime(&self, t: f64) -> f64 {
        let s = self.theta(t);
        let w = self.upper.value(s) - self.lower.value(s);
        w * w
    }

    /// Safeguarded Newton on the Hermite segment containing `s`.
    pub fn inverse(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, *self.thetas.last().unwrap());
        let k = self.thetas.partition_point(|&v| v <= s).clamp(1, self.thetas.len() - 1) - 1;
        let (mut lo, mut hi) = (self.ts[k], self.ts[k + 1]);
        let (th0, th1) = (self.thetas[k], self.thetas[k + 1]);
        let mut t = lo + (hi - lo) * (s - th0) / (th1 - th0);
        for _ in 0..60 {
            let (v, d) = self.hermite(k, t);
            let r = v - s;
            if r.abs() <= 1e-15 * s.abs().max(1e-300) {
                break;
            }
            if r > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let newton = t - r / d;
            t = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= 1e-16 * hi.abs() {
                break;
            }
        }
        t
    }
}

// Dormand-Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// One Dormand-Prince step of the autonomous scalar ODE `y' = f(y)`.
/// Returns the fifth-order value, the error estimate and `f` at the new point.
fn dp_step(f: &dyn Fn(f64) -> f64, y: f64, fy: f64, h: f64) -> (f64, f64, f64) {
    let _ = DP_C;
    let mut k = [0.0; 7];
    k[0] = fy;
    for i in 1..7 {
        let incr: f64 = (0..i).map(|j| DP_A[i][j] * k[j]).sum();
        k[i] = f(y + h * incr);
    }
    let y_new = y + h * (0..6).map(|j| DP_A[6][j] * k[j]).sum::<f64>();
    let err = h * (0..7).map(|j| DP_E[j] * k[j]).sum::<f64>();
    (y_new, err.abs(), k[6])
}

/// Solves the time-change ODE for `tp`.
///
/// Affine boundaries use the closed form; anything else is integrated with an
/// adaptive Dormand-Prince pair and the end time is located by event detection.
pub fn solve_time_change(tp: &TildeProblem, opts: &TimeChangeOptions) -> Result<TimeChange> {
    let target = tp.horizon;
    if let (Boundary::Affine { intercept: a0, slope: a1 }, Boundary::Affine { intercept: b0, slope: b1 }) =
        (&tp.lower, &tp.upper)
    {
        let (w0, w1) = (b0 - a0, b1 - a1);
        let w_end = w0 + w1 * target;
        if w0 <= 0.0 || w_end <= 0.0 {
            return Err(Error::BoundariesMeet { time: target, lower: a0 + a1 * target, upper: b0 + b1 * target });
        }
        return Ok(TimeChange::Affine { w0, w1, end: target / (w0 * w_end), tilde_end: target });
    }
    integrate_time_change(tp, opts).map(TimeChange::Sampled)
}

fn integrate_time_change(tp: &TildeProblem, opts: &TimeChangeOptions) -> Result<SampledTimeChange> {
    let target = tp.horizon;
    let rhs = |s: f64| {
        let w = tp.width(s.clamp(0.0, target));
        w * w
    };
    let rtol = opts.ode_tol;
    let atol = opts.ode_tol * target;
    let dtheta_max = opts.max_theta_step * target;

    let mut ts = vec![0.0];
    let mut thetas = vec![0.0];
    let mut slopes = vec![rhs(0.0)];
    let (mut t, mut y, mut fy) = (0.0_f64, 0.0_f64, slopes[0]);
    let mut h = (dtheta_max / fy).min(1e-3 / fy.max(1e-300));

    loop {
        if t > opts.max_span {
            return Err(Error::TimeChangeStalled { target, span: opts.max_span });
        }
        h = h.min(dtheta_max / fy.max(1e-300));
        let (y_new, err, f_new) = dp_step(&rhs, y, fy, h);
        let scale = atol + rtol * y_new.abs();
        if err > scale {
            h *= (0.9 * (scale / err).powf(0.2)).max(0.1);
            if h < 1e-14 * (1.0 + t) {
                return Err(Error::TimeChangeStalled { target, span: t });
            }
            continue;
        }
        if y_new >= target {
            // Event: land exactly on theta = T~ by secant iteration on the step size.
            let (mut h_lo, mut r_lo) = (0.0, y - target);
            let (mut h_hi, mut r_hi) = (h, y_new - target);
            let mut landed = (h, f_new);
            for _ in 0..50 {
                let h_try =
                    if r_hi != r_lo { h_lo - r_lo * (h_hi - h_lo) / (r_hi - r_lo) } else { 0.5 * (h_lo + h_hi) };
                let h_try = h_try.clamp(h_lo + 1e-3 * (h_hi - h_lo), h_hi - 1e-3 * (h_hi - h_lo));
                let (y_try, _, f_try) = dp_step(&rhs, y, fy, h_try);
                let r = y_try - target;
                landed = (h_try, f_try);
                if r.abs() <= 1e-15 * target || h_hi - h_lo <= 1e-16 * (t + h) {
                    break;
                }
                if r > 0.0 {
                    h_hi = h_try;
                    r_hi = r;
                } else {
                    h_lo = h_try;
                    r_lo = r;
                }
            }
            ts.push(t + landed.0);
            thetas.push(target);
            slopes.push(landed.1);
            return Ok(SampledTimeChange { ts, thetas, slopes, lower: tp.lower.clone(), upper: tp.upper.clone() });
        }
        t += h;
        y = y_new;
        fy = f_new;
        ts.push(t);
        thetas.push(y);
        slopes.push(fy);
        let growth = if err > 0.0 { 0.9 * (scale / err).powf(0.2) } else { 5.0 };
        h *= growth.clamp(0.2, 5.0);
    }
}

/// Drift on the straightened domain `[0, T] x [0, 1]`.
#[derive(Clone, Debug)]
pub struct TransformedProblem {
    pub tilde: TildeProblem,
    pub time_change: TimeChange,
    v0: f64,
}

impl TransformedProblem {
    pub fn end_time(&self) -> f64 {
        self.time_change.end_time()
    }

    /// `v(0, 0)`, the drift of the subtracted constant-drift problem.
    pub fn v0(&self) -> f64 {
        self.v0
    }

    /// `v(t, x) = (b - a)(theta) [ v~(theta, xi) + (1 - x) a'(theta) + x b'(theta) ]`.
    pub fn v(&self, t: f64, x: f64) -> f64 {
        let s = self.time_change.theta(t);
        let tp = &self.tilde;
        let width = tp.width(s);
        let boundary_terms = (1.0 - x) * tp.lower.derivative(s) + x * tp.upper.derivative(s);
        width * (tp.drift.value(s, tp.xi(s, x)) + boundary_terms)
    }

    /// `d/dx v(t, x) = (b - a)^2 dv~/dx~ + (b - a)(b' - a')`.
    pub fn v_dx(&self, t: f64, x: f64) -> f64 {
        let s = self.time_change.theta(t);
        let tp = &self.tilde;
        let width = tp.width(s);
        width * (width * tp.drift.dx(s, tp.xi(s, x)) + tp.upper.derivative(s) - tp.lower.derivative(s))
    }

    /// Drift on unit time, `v^(t, x) = v(t T, x)`.
    pub fn vhat(&self, t: f64, x: f64) -> f64 {
        self.v(t * self.end_time(), x)
    }

    pub fn vhat_dx(&self, t: f64, x: f64) -> f64 {
        self.v_dx(t * self.end_time(), x)
    }

    /// Maps a straightened point back to the moving domain.
    pub fn forward_point(&self, t: f64, x: f64) -> (f64, f64) {
        let s = self.time_change.theta(t);
        (s, self.tilde.xi(s, x))
    }
}

pub fn transform_drift(tp: &TildeProblem, tc: &TimeChange) -> Result<TransformedProblem> {
    if (tc.tilde_end() - tp.horizon).abs() > 1e-9 * tp.horizon {
        return Err(Error::InvalidProblem(format!(
            "time change ends at {} but the problem horizon is {}",
            tc.tilde_end(),
            tp.horizon
        )));
    }
    let mut out = TransformedProblem { tilde: tp.clone(), time_change: tc.clone(), v0: 0.0 };
    out.v0 = out.v(0.0, 0.0);
    Ok(out)
}

/// Inverse of the straightening map: `(t~, x~) -> (theta^-1(t~), (x~ - a) / (b - a))`.
pub fn pullback_point(tc: &TimeChange, tp: &TildeProblem, s: f64, xs: f64) -> Result<(f64, f64)> {
    let slack = 1e-12 * (1.0 + tp.horizon);
    if !(s >= -slack && s <= tp.horizon + slack) {
        return Err(Error::OutsideDomain { t: s, x: xs });
    }
    let s = s.clamp(0.0, tp.horizon);
    let (a, b) = (tp.lower.value(s), tp.upper.value(s));
    let xslack = 1e-12 * (b - a);
    if !(xs >= a - xslack && xs <= b + xslack) {
        return Err(Error::OutsideDomain { t: s, x: xs });
    }
    Ok((tc.inverse(s), ((xs - a) / (b - a)).clamp(0.0, 1.0)))
}

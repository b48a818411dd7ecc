//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key may appear at
//! most once and unknown keys are rejected.
//!
//! | key | value | default |
//! |---|---|---|
//! | `model` | `hyperbolic`, `linear_drift`, `collapsing` | `linear_drift` |
//! | `convention` | `paper-compat`, `sde-consistent` | `paper-compat` |
//! | `h` | comma list of mesh sizes `2^-k`, as `0.125` or `2^-3` | `2^-3, 2^-4, 2^-5, 2^-6` |
//! | `q` | comma list of sparse levels `>= N` | `N, N+1, N+2` |
//! | `test_set` | `five` (`{-1,-0.5,0,0.5,1}^N`) or `four` (`{-1,-0.5,0.5,1}^N`) | `five` |
//! | `rho` | `;`-separated points replacing the test set, coordinates comma separated | unset |
//! | `range.<name>` | `lo, hi` override of one model parameter | built in |
//! | `ode_tol`, `spectral_tol`, `cg_tol` | tolerances | `1e-10`, `1e-10`, `1e-11` |
//! | `shift` | `auto`, `young` or a fixed non-negative number | `auto` |
//! | `y` | comma list of start states | midpoint of the initial interval |
//! | `mc_paths`, `mc_dt`, `mc_bridge` | Monte Carlo settings | `200000`, `1e-4`, `true` |
//! | `seed` | `u64` | `2024` |
//! | `threads` | worker count, `0` for all cores | `0` |
//! | `out` | output directory | `out` |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use fpt_core::fem::{QuadratureOptions, ShiftPolicy, SolveOptions};
use fpt_core::geometry::{Convention, TimeChangeOptions};
use fpt_core::models::{Model, ModelFamily};
use fpt_core::oracles::McConfig;
use fpt_core::pipeline::PipelineOptions;
use fpt_core::Exec;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestSet {
    Five,
    Four,
}

impl TestSet {
    fn axis(self) -> &'static [f64] {
        match self {
            TestSet::Five => &[-1.0, -0.5, 0.0, 0.5, 1.0],
            TestSet::Four => &[-1.0, -0.5, 0.5, 1.0],
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            TestSet::Five => "five",
            TestSet::Four => "four",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub model: ModelFamily,
    pub convention: Convention,
    /// Exponents `k` of the mesh sizes `h = 2^-k`.
    pub h_exponents: Vec<u32>,
    pub q: Vec<usize>,
    pub test_set: TestSet,
    pub rho: Option<Vec<Vec<f64>>>,
    pub ranges: Vec<(String, f64, f64)>,
    pub ode_tol: f64,
    pub spectral_tol: f64,
    pub cg_tol: f64,
    pub shift: ShiftPolicy,
    pub y: Option<Vec<f64>>,
    pub mc_paths: usize,
    pub mc_dt: f64,
    pub mc_bridge: bool,
    pub seed: u64,
    pub threads: usize,
    pub out: PathBuf,
}

const KEYS: &[&str] = &[
    "model",
    "convention",
    "h",
    "q",
    "test_set",
    "rho",
    "ode_tol",
    "spectral_tol",
    "cg_tol",
    "shift",
    "y",
    "mc_paths",
    "mc_dt",
    "mc_bridge",
    "seed",
    "threads",
    "out",
];

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_f64(key: &str, s: &str) -> Result<f64, CliError> {
    s.trim().parse::<f64>().map_err(|_| config_err(format!("`{key}`: `{}` is not a number", s.trim())))
}

fn parse_list<T>(key: &str, s: &str, item: impl Fn(&str, &str) -> Result<T, CliError>) -> Result<Vec<T>, CliError> {
    let out = s.split(',').map(|p| item(key, p)).collect::<Result<Vec<_>, _>>()?;
    if out.is_empty() {
        return Err(config_err(format!("`{key}` is empty")));
    }
    Ok(out)
}

/// Accepts `2^-k` or a decimal equal to a negative power of two.
fn parse_h(key: &str, s: &str) -> Result<u32, CliError> {
    let s = s.trim();
    if let Some(k) = s.strip_prefix("2^-") {
        return k.parse::<u32>().map_err(|_| config_err(format!("`{key}`: bad exponent in `{s}`")));
    }
    let h = parse_f64(key, s)?;
    let k = -h.log2();
    if h > 0.0 && h < 1.0 && k.fract() == 0.0 {
        Ok(k as u32)
    } else {
        Err(config_err(format!("`{key}`: {s} is not of the form 2^-k")))
    }
}

impl RunConfig {
    pub fn defaults(model: ModelFamily) -> Self {
        let n = Model::new(model).dim();
        RunConfig {
            model,
            convention: Convention::PaperCompat,
            h_exponents: vec![3, 4, 5, 6],
            q: vec![n, n + 1, n + 2],
            test_set: TestSet::Five,
            rho: None,
            ranges: Vec::new(),
            ode_tol: 1e-10,
            spectral_tol: 1e-10,
            cg_tol: 1e-11,
            shift: ShiftPolicy::Auto,
            y: None,
            mc_paths: 200_000,
            mc_dt: 1e-4,
            mc_bridge: true,
            seed: 2024,
            threads: 0,
            out: PathBuf::from("out"),
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {}: expected `key = value`", lineno + 1)))?;
            let k = k.trim().to_string();
            if !KEYS.contains(&k.as_str()) && !k.starts_with("range.") {
                return Err(config_err(format!("line {}: unknown key `{k}`", lineno + 1)));
            }
            if entries.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(config_err(format!("line {}: duplicate key `{k}`", lineno + 1)));
            }
        }

        let model = match entries.get("model") {
            Some(m) => m.parse::<ModelFamily>().map_err(|e| config_err(e.to_string()))?,
            None => ModelFamily::LinearDrift,
        };
        let mut cfg = RunConfig::defaults(model);
        let dim = Model::new(model).dim();
        for (k, v) in &entries {
            match k.as_str() {
                "model" => {}
                "convention" => cfg.convention = v.parse().map_err(|e: fpt_core::Error| config_err(e.to_string()))?,
                "h" => cfg.h_exponents = parse_list(k, v, parse_h)?,
                "q" => {
                    cfg.q = parse_list(k, v, |k, s| {
                        s.trim()
                            .parse::<usize>()
                            .map_err(|_| config_err(format!("`{k}`: `{}` is not an integer", s.trim())))
                    })?
                }
                "test_set" => {
                    cfg.test_set = match v.as_str() {
                        "five" => TestSet::Five,
                        "four" => TestSet::Four,
                        other => return Err(config_err(format!("`test_set`: expected five or four, got `{other}`"))),
                    }
                }
                "rho" => {
                    let pts = v.split(';').map(|p| parse_list(k, p, parse_f64)).collect::<Result<Vec<_>, _>>()?;
                    cfg.rho = Some(pts);
                }
                "ode_tol" => cfg.ode_tol = parse_f64(k, v)?,
                "spectral_tol" => cfg.spectral_tol = parse_f64(k, v)?,
                "cg_tol" => cfg.cg_tol = parse_f64(k, v)?,
                "shift" => {
                    cfg.shift = match v.as_str() {
                        "auto" => ShiftPolicy::Auto,
                        "young" => ShiftPolicy::Young,
                        other => ShiftPolicy::Fixed(parse_f64(k, other)?),
                    }
                }
                "y" => cfg.y = Some(parse_list(k, v, parse_f64)?),
                "mc_paths" => cfg.mc_paths = v.parse().map_err(|_| config_err(format!("`mc_paths`: `{v}`")))?,
                "mc_dt" => cfg.mc_dt = parse_f64(k, v)?,
                "mc_bridge" => cfg.mc_bridge = v.parse().map_err(|_| config_err(format!("`mc_bridge`: `{v}`")))?,
                "seed" => cfg.seed = v.parse().map_err(|_| config_err(format!("`seed`: `{v}`")))?,
                "threads" => cfg.threads = v.parse().map_err(|_| config_err(format!("`threads`: `{v}`")))?,
                "out" => cfg.out = PathBuf::from(v),
                _ => {
                    let name = &k["range.".len()..];
                    let b = parse_list(k, v, parse_f64)?;
                    if b.len() != 2 {
                        return Err(config_err(format!("`{k}` needs `lo, hi`")));
                    }
                    cfg.ranges.push((name.to_string(), b[0], b[1]));
                }
            }
        }
        if !entries.contains_key("q") {
            cfg.q = vec![dim, dim + 1, dim + 2];
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let model = self.model()?;
        let n = model.dim();
        if self.h_exponents.iter().any(|&k| !(1..=12).contains(&k)) {
            return Err(config_err("`h` must lie between 2^-1 and 2^-12"));
        }
        if let Some(&q) = self.q.iter().find(|&&q| q < n) {
            return Err(config_err(format!("`q` = {q} is below the parameter dimension {n}")));
        }
        if let Some(pts) = &self.rho {
            for p in pts {
                if p.len() != n || p.iter().any(|r| !(-1.0..=1.0).contains(r)) {
                    return Err(config_err(format!("`rho` point {p:?} is not in [-1, 1]^{n}")));
                }
            }
        }
        for (name, tol) in [("ode_tol", self.ode_tol), ("spectral_tol", self.spectral_tol), ("cg_tol", self.cg_tol)] {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(config_err(format!("`{name}` must lie in (0, 1)")));
            }
        }
        if let ShiftPolicy::Fixed(l) = self.shift {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(config_err("`shift` must be auto, young or a non-negative number"));
            }
        }
        if self.mc_paths == 0 || self.mc_dt.is_nan() || self.mc_dt <= 0.0 {
            return Err(config_err("`mc_paths` must be positive and `mc_dt` > 0"));
        }
        Ok(())
    }

    /// Model with the configured range overrides applied.
    pub fn model(&self) -> Result<Model, CliError> {
        let mut m = Model::new(self.model);
        for (name, lo, hi) in &self.ranges {
            m.param_box.set_range(name, *lo, *hi).map_err(|e| config_err(format!("`range.{name}`: {e}")))?;
        }
        Ok(m)
    }

    pub fn pipeline(&self) -> PipelineOptions {
        PipelineOptions {
            convention: self.convention,
            time_change: TimeChangeOptions { ode_tol: self.ode_tol, ..Default::default() },
            spectral_tol: self.spectral_tol,
            quad: QuadratureOptions::default(),
            shift: self.shift,
            strict: true,
            solve: SolveOptions { cg_tol: self.cg_tol, ..Default::default() },
            // parameter points run in parallel; each solve stays on one worker
            exec: Exec::Sequential,
        }
    }

    pub fn mc(&self) -> McConfig {
        McConfig { paths: self.mc_paths, dt: self.mc_dt, seed: self.seed, bridge: self.mc_bridge }
    }

    /// Parameter points: the explicit `rho` list or the full test set, in canonical order.
    pub fn points(&self) -> Result<Vec<Vec<f64>>, CliError> {
        if let Some(p) = &self.rho {
            return Ok(p.clone());
        }
        let n = self.model()?.dim();
        let axis = self.test_set.axis();
        let mut out = vec![Vec::new()];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|p: Vec<f64>| {
                    axis.iter().map(move |&a| {
                        let mut q = p.clone();
                        q.push(a);
                        q
                    })
                })
                .collect();
        }
        Ok(out)
    }

    /// Resolved configuration in the input format; parsing it gives back `self`.
    pub fn render(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        let _ = writeln!(s, "model = {}", self.model.as_str());
        let _ = writeln!(s, "convention = {}", self.convention);
        let hs: Vec<String> = self.h_exponents.iter().map(|k| format!("2^-{k}")).collect();
        let _ = writeln!(s, "h = {}", hs.join(", "));
        let qs: Vec<String> = self.q.iter().map(|q| q.to_string()).collect();
        let _ = writeln!(s, "q = {}", qs.join(", "));
        let _ = writeln!(s, "test_set = {}", self.test_set.as_str());
        if let Some(pts) = &self.rho {
            let p: Vec<String> = pts.iter().map(|p| join(p)).collect();
            let _ = writeln!(s, "rho = {}", p.join("; "));
        }
        for (name, lo, hi) in &self.ranges {
            let _ = writeln!(s, "range.{name} = {lo:?}, {hi:?}");
        }
        let _ = writeln!(s, "ode_tol = {:e}", self.ode_tol);
        let _ = writeln!(s, "spectral_tol = {:e}", self.spectral_tol);
        let _ = writeln!(s, "cg_tol = {:e}", self.cg_tol);
        let shift = match self.shift {
            ShiftPolicy::Auto => "auto".to_string(),
            ShiftPolicy::Young => "young".to_string(),
            ShiftPolicy::Fixed(l) => format!("{l:?}"),
        };
        let _ = writeln!(s, "shift = {shift}");
        if let Some(y) = &self.y {
            let _ = writeln!(s, "y = {}", join(y));
        }
        let _ = writeln!(s, "mc_paths = {}", self.mc_paths);
        let _ = writeln!(s, "mc_dt = {:e}", self.mc_dt);
        let _ = writeln!(s, "mc_bridge = {}", self.mc_bridge);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "threads = {}", self.threads);
        let _ = writeln!(s, "out = {}", self.out.display());
        s
    }
}

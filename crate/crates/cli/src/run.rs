//! Study drivers behind the subcommands.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Mutex;

use fpt_core::fem::{xnorm, CoeffGrid, Mesh, NormSystem};
use fpt_core::oracles::mc_first_hit;
use fpt_core::pipeline::Instance;
use fpt_core::sparsegrid::build_interpolant;
use fpt_core::Exec;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::CliError;

pub const CONVERGENCE_HEADER: &str = "model,rho,h,err_xnorm";
pub const INTERPOLATION_HEADER: &str = "model,h,q,points,max_err";

fn fmt_norm(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_point(p: &[f64]) -> String {
    p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

fn h_of(k: u32) -> f64 {
    (-(k as f64)).exp2()
}

fn write(path: &Path, body: &str) -> Result<(), CliError> {
    std::fs::write(path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Copies the resolved configuration into the output directory.
pub fn prepare_out(cfg: &RunConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::Io(format!("{}: {e}", cfg.out.display())))?;
    write(&cfg.out.join("config.resolved"), &cfg.render())
}

/// `||e_{h/2} - e_h||` for every configured `h` at one parameter point.
fn refinement_errors(cfg: &RunConfig, rho: &[f64]) -> fpt_core::Result<Vec<f64>> {
    let model = cfg.model().map_err(|e| fpt_core::Error::InvalidProblem(e.to_string()))?;
    let inst = model.instantiate(rho, &cfg.pipeline())?;
    let mut sols: HashMap<u32, CoeffGrid> = HashMap::new();
    let mut out = Vec::with_capacity(cfg.h_exponents.len());
    for &k in &cfg.h_exponents {
        for kk in [k, k + 1] {
            if let Entry::Vacant(e) = sols.entry(kk) {
                e.insert(inst.solve(Mesh::dyadic(kk)?)?.e);
            }
        }
        let fine_mesh = Mesh::dyadic(k + 1)?;
        let diff = sols[&(k + 1)].sub(&sols[&k].prolong(fine_mesh.n)?);
        out.push(xnorm(&diff, &inst.norm_system(fine_mesh)?)?);
    }
    Ok(out)
}

/// Writes `convergence.csv`; on a solver failure the rows before it are kept and a marker row ends the file.
pub fn convergence(cfg: &RunConfig) -> Result<(), CliError> {
    let points = cfg.points()?;
    let results: Vec<fpt_core::Result<Vec<f64>>> = points.par_iter().map(|r| refinement_errors(cfg, r)).collect();
    let name = cfg.model.as_str();
    let mut csv = format!("{CONVERGENCE_HEADER}\n");
    let mut failure = None;
    'rows: for (ik, &k) in cfg.h_exponents.iter().enumerate() {
        let mut max: f64 = 0.0;
        for (p, res) in points.iter().zip(&results) {
            match res {
                Ok(errs) => {
                    let _ = writeln!(csv, "{name},{},{},{}", fmt_point(p), h_of(k), fmt_norm(errs[ik]));
                    max = max.max(errs[ik]);
                }
                Err(e) => {
                    let _ = writeln!(csv, "{name},FAILED,{},nan", h_of(k));
                    failure = Some(CliError::Numerical(format!("rho = {}: {e}", fmt_point(p))));
                    break 'rows;
                }
            }
        }
        let _ = writeln!(csv, "{name},max,{},{}", h_of(k), fmt_norm(max));
    }
    write(&cfg.out.join("convergence.csv"), &csv)?;
    failure.map_or(Ok(()), Err)
}

/// Writes `interpolation.csv` and one interpolant file per `(h, q)`.
pub fn interpolate(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.q.is_empty() {
        return Err(CliError::Config("`q` is empty".into()));
    }
    let model = cfg.model()?;
    let opts = cfg.pipeline();
    let points = cfg.points()?;
    let name = cfg.model.as_str();
    let mut csv = format!("{INTERPOLATION_HEADER}\n");
    for &k in &cfg.h_exponents {
        let mesh = Mesh::dyadic(k).map_err(num)?;
        let reference: Vec<(CoeffGrid, NormSystem)> = points
            .par_iter()
            .map(|r| {
                let inst: Instance = model.instantiate(r, &opts)?;
                Ok((inst.solve(mesh)?.e, inst.norm_system(mesh)?))
            })
            .collect::<fpt_core::Result<Vec<_>>>()
            .map_err(num)?;
        let cache: Mutex<HashMap<Vec<u64>, CoeffGrid>> = Mutex::new(HashMap::new());
        let solve = |r: &[f64]| -> fpt_core::Result<CoeffGrid> {
            let key: Vec<u64> = r.iter().map(|v| v.to_bits()).collect();
            if let Some(e) = cache.lock().unwrap().get(&key) {
                return Ok(e.clone());
            }
            let e = model.instantiate(r, &opts)?.solve(mesh)?.e;
            cache.lock().unwrap().insert(key, e.clone());
            Ok(e)
        };
        for &q in &cfg.q {
            let si = build_interpolant(model.dim(), q, solve, Exec::Parallel).map_err(num)?;
            let errs = points
                .par_iter()
                .zip(&reference)
                .map(|(r, (e, ns))| xnorm(&e.sub(&si.eval(r)?), ns))
                .collect::<fpt_core::Result<Vec<f64>>>()
                .map_err(num)?;
            let max = errs.into_iter().fold(0.0, f64::max);
            let _ = writeln!(csv, "{name},{},{q},{},{}", h_of(k), si.grid.len(), fmt_norm(max));
            si.save(&cfg.out.join(format!("interpolant_k{k}_q{q}.json"))).map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    write(&cfg.out.join("interpolation.csv"), &csv)
}

/// Writes `probability.csv`: space-time solution against Monte Carlo at each `(rho, y)`.
///
/// Without an explicit `rho` only the cube centre is used, and the mesh is the finest configured `h`.
pub fn probability(cfg: &RunConfig) -> Result<(), CliError> {
    let model = cfg.model()?;
    let opts = cfg.pipeline();
    let points = match &cfg.rho {
        Some(p) => p.clone(),
        None => vec![vec![0.0; model.dim()]],
    };
    let k = *cfg.h_exponents.iter().max().expect("validated non-empty");
    let mesh = Mesh::dyadic(k).map_err(num)?;
    let mut tasks = Vec::new();
    for r in &points {
        let fp = model.fp_problem(r).map_err(num)?;
        let (a, b) = (fp.lower.value(0.0), fp.upper.value(0.0));
        for &y in cfg.y.as_deref().unwrap_or(&[0.5 * (a + b)]) {
            if !(a..=b).contains(&y) {
                return Err(CliError::Config(format!("start state {y} outside [{a}, {b}] at rho = {}", fmt_point(r))));
            }
            tasks.push((r.clone(), y));
        }
    }
    let rows = tasks
        .par_iter()
        .enumerate()
        .map(|(i, (r, y))| {
            let inst = model.instantiate(r, &opts)?;
            let e = inst.solve(mesh)?.e;
            let p = inst.hitting_probability(&e, *y)?;
            let mut mc = cfg.mc();
            mc.seed = mc.seed.wrapping_add(i as u64);
            let est = mc_first_hit(&inst.fp.equivalent_sde(opts.convention), *y, &mc, Exec::Sequential)?;
            Ok((p, est.p, est.se))
        })
        .collect::<fpt_core::Result<Vec<_>>>()
        .map_err(num)?;
    let names: Vec<String> = model.param_box.names.iter().map(|n| format!("rho_{n}")).collect();
    let mut csv = format!("model,{},y,p_mrm,p_mc,mc_se\n", names.join(","));
    for ((r, y), (p, pmc, se)) in tasks.iter().zip(rows) {
        let rho: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(
            csv,
            "{},{},{y},{},{},{}",
            cfg.model.as_str(),
            rho.join(","),
            fmt_norm(p),
            fmt_norm(pmc),
            fmt_norm(se)
        );
    }
    write(&cfg.out.join("probability.csv"), &csv)
}

fn num(e: fpt_core::Error) -> CliError {
    CliError::Numerical(e.to_string())
}

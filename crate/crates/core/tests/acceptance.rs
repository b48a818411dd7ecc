use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::Mutex;

use fpt_core::fem::{
    assemble, assemble_load, solve_shifted, xnorm, CoeffGrid, FnField, Mesh, NormSystem, QuadratureOptions,
    SolveOptions,
};
use fpt_core::geometry::{solve_time_change, Boundary, Convention, Drift, FpProblem, TildeProblem, TimeChangeOptions};
use fpt_core::models::{Model, ModelFamily};
use fpt_core::oracles::{cn_solve, mc_first_hit, CnConfig, CnMode, McConfig};
use fpt_core::pipeline::{Instance, PipelineOptions};
use fpt_core::refsol::ConstDriftSolution;
use fpt_core::sparsegrid::{build_interpolant, SparseGrid};
use fpt_core::Exec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Writes the verdict past the test harness capture, then fails the test if needed.
fn report(criterion: u32, pass: bool, detail: String) {
    let line = format!("criterion {criterion}: {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// `||e_{h/2} - e_h||` for `h = 2^-k`, `k` in `ks`, reusing every solve.
fn refinement_errors(inst: &Instance, ks: &[u32]) -> Vec<f64> {
    let mut sols: HashMap<u32, CoeffGrid> = HashMap::new();
    let mut get = |k: u32| sols.entry(k).or_insert_with(|| inst.solve(Mesh::dyadic(k).unwrap()).unwrap().e).clone();
    ks.iter()
        .map(|&k| {
            let coarse = get(k);
            let fine = get(k + 1);
            let ns = inst.norm_system(Mesh::dyadic(k + 1).unwrap()).unwrap();
            xnorm(&fine.sub(&coarse.prolong(fine.n).unwrap()), &ns).unwrap()
        })
        .collect()
}

#[test]
fn criterion_1_first_order_convergence() {
    let opts = PipelineOptions::default();
    let ks = [3, 4, 5, 6];
    let mut pass = true;
    let mut detail = Vec::new();
    for family in ModelFamily::ALL {
        let model = Model::new(family);
        let centre = vec![0.0; model.dim()];
        let inst = model.instantiate(&centre, &opts).unwrap();
        let mut errs = refinement_errors(&inst, &ks);
        let mut at = "0";
        if family == ModelFamily::LinearDrift {
            // the centre of this box has zero drift, so the correction vanishes identically
            let zero = errs.iter().all(|&e| e == 0.0);
            pass &= zero;
            detail.push(format!("{}@0 err=0:{zero}", family.as_str()));
            let inst = model.instantiate(&[0.5; 3], &opts).unwrap();
            errs = refinement_errors(&inst, &ks);
            at = "0.5";
        }
        let log_h: Vec<f64> = ks.iter().map(|&k| -(k as f64) * 2f64.ln()).collect();
        let log_e: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let slope = least_squares_slope(&log_h, &log_e);
        let ok = (0.8..=1.3).contains(&slope);
        pass &= ok;
        detail.push(format!("{}@{at} slope={slope:.3}", family.as_str()));
    }
    report(1, pass, detail.join(" "));
}

#[test]
fn criterion_2_quasi_optimality() {
    let field = FnField { value: |t: f64, x: f64| 1.0 + t * x, dx: |t: f64, _: f64| t };
    let end_time = 1.0;
    let w_star = |t: f64, x: f64| t * (PI * x).sin();
    let load = |t: f64, x: f64| {
        let (s, c) = (PI * x).sin_cos();
        s - end_time * (-PI * PI * t * s + (1.0 + t * x) * PI * t * c)
    };
    let quad = QuadratureOptions::default();
    let mut pass = true;
    let mut detail = Vec::new();
    for k in 2..=5u32 {
        let mesh = Mesh::dyadic(k).unwrap();
        let sys = assemble(&field, end_time, mesh, 0.0, &quad, Exec::default()).unwrap();
        let f = assemble_load(&sys, &quad, load);
        let (w_h, _) = solve_shifted(&sys, &f, &SolveOptions::default()).unwrap();
        let fine = Mesh::new(8 * mesh.n).unwrap();
        let ns = NormSystem::new(&field, end_time, fine, &quad, Exec::default()).unwrap();
        let exact = CoeffGrid::interpolate(fine, w_star);
        let err_mrm = xnorm(&exact.sub(&w_h.prolong(fine.n).unwrap()), &ns).unwrap();
        let err_int = xnorm(&exact.sub(&CoeffGrid::interpolate(mesh, w_star).prolong(fine.n).unwrap()), &ns).unwrap();
        let ratio = err_mrm / err_int;
        pass &= ratio <= 3.0;
        detail.push(format!("h=2^-{k} ratio={ratio:.3}"));
    }
    report(2, pass, detail.join(" "));
}

#[test]
fn criterion_3_reference_solution_consistency() {
    let mut worst: f64 = 0.0;
    for v0 in [-4.0, -1.0, 0.0, 1.0, 4.0] {
        let rs = ConstDriftSolution::new(v0, 1.0);
        for it in 0..=8 {
            let t = rs.t_cross * (0.5 + 1.5 * it as f64 / 8.0);
            for ix in 0..=10 {
                let x = ix as f64 / 10.0;
                let d = (rs.eval_spectral(t, x).unwrap() - rs.eval_images(t, x).unwrap()).abs();
                worst = worst.max(d);
            }
        }
    }
    let small_t = ConstDriftSolution::new(0.0, 1.0).eval(0.01, 0.1).unwrap();
    let small_t_err = (small_t - 0.4795001222).abs();
    report(3, worst <= 1e-8 && small_t_err <= 1e-8, format!("max overlap diff={worst:.2e} u(0.01,0.1)={small_t:.10}"));
}

#[test]
fn criterion_4_oracle_triangle() {
    let opts = PipelineOptions { convention: Convention::SdeConsistent, ..Default::default() };
    let mesh = Mesh::dyadic(6).unwrap();
    let cn = CnConfig::new(512, 512).unwrap();
    let mc = McConfig { paths: 200_000, dt: 1e-4, seed: 2024, bridge: true };
    let xs = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mut pass = true;
    let mut detail = Vec::new();
    for family in ModelFamily::ALL {
        let model = Model::new(family);
        let centre = vec![0.0; model.dim()];
        let inst = model.instantiate(&centre, &opts).unwrap();
        let e = inst.solve(mesh).unwrap().e;
        let fd = cn_solve(&inst.problem, inst.end_time(), cn, CnMode::Full).unwrap();
        let sde = inst.fp.equivalent_sde(opts.convention);
        let (a, b) = (inst.fp.lower.value(0.0), inst.fp.upper.value(0.0));
        let (mut worst_cn, mut worst_mc): (f64, f64) = (0.0, f64::NEG_INFINITY);
        for x in xs {
            let y = a + x * (b - a);
            let p = inst.hitting_probability(&e, y).unwrap();
            worst_cn = worst_cn.max((p - fd.final_value(x)).abs());
            let est = mc_first_hit(&sde, y, &mc, Exec::default()).unwrap();
            // margin left over from the allowed band, negative when violated
            worst_mc = worst_mc.max((p - est.p).abs() - (3.0 * est.se + 2.0 * mesh.h()));
        }
        pass &= worst_cn <= 0.01 && worst_mc <= 0.0;
        detail.push(format!("{} cn={worst_cn:.2e} mc_excess={worst_mc:.2e}", family.as_str()));
    }
    report(4, pass, detail.join(" "));
}

#[test]
fn criterion_5_gamblers_ruin() {
    let fp = FpProblem::new(Drift::constant(1.0), 1.0, Boundary::constant(0.0), Boundary::constant(1.0), 40.0).unwrap();
    let opts = PipelineOptions { convention: Convention::SdeConsistent, ..Default::default() };
    let inst = Instance::new(fp, &opts).unwrap();
    let e = inst.solve(Mesh::dyadic(7).unwrap()).unwrap().e;
    let p = inst.hitting_probability(&e, 0.5).unwrap();
    let err = (p - 0.2689414214).abs();
    report(5, err <= 5e-3, format!("p={p:.10} err={err:.2e}"));
}

#[test]
fn criterion_6_smolyak() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    // (a) interpolation property
    let grid = SparseGrid::new(3, 6).unwrap();
    let data: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let pts = grid.points().to_vec();
    let si =
        build_interpolant(3, 6, |r| Ok(data[pts.iter().position(|p| p.as_slice() == r).unwrap()]), Exec::Sequential)
            .unwrap();
    let interp_err = pts.iter().zip(&data).map(|(p, d)| (si.eval(p).unwrap() - d).abs()).fold(0.0, f64::max);

    // (b) tensor monomials r0^a r1^b in the level-4 space in two dimensions
    let level = |d: u32| {
        if d == 0 {
            1
        } else if d <= 2 {
            2
        } else {
            3
        }
    };
    let mut mono_err: f64 = 0.0;
    for a in 0..=4u32 {
        for b in 0..=4u32 {
            if level(a) + level(b) > 4 {
                continue;
            }
            let f = |r: &[f64]| r[0].powi(a as i32) * r[1].powi(b as i32);
            let si = build_interpolant(2, 4, |r| Ok(f(r)), Exec::Sequential).unwrap();
            for _ in 0..20 {
                let r = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
                mono_err = mono_err.max((si.eval(&r).unwrap() - f(&r)).abs());
            }
        }
    }

    // (c) empirical Lebesgue bound
    let bound = (grid.len() * grid.len()) as f64;
    let weights: Vec<Vec<f64>> = (0..100)
        .map(|_| {
            let r: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..=1.0)).collect();
            grid.weights(&r).unwrap()
        })
        .collect();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let f: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        for w in &weights {
            worst = worst.max(w.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>().abs());
        }
    }
    report(
        6,
        interp_err <= 1e-13 && mono_err <= 1e-12 && worst <= bound,
        format!("interp={interp_err:.1e} monomial={mono_err:.1e} lebesgue={worst:.3}<={bound}"),
    );
}

#[test]
fn criterion_7_interpolation_error_decay() {
    let model = Model::new(ModelFamily::LinearDrift);
    let opts = PipelineOptions { exec: Exec::Sequential, ..Default::default() };
    let mesh = Mesh::dyadic(5).unwrap();
    let key = |r: &[f64]| r.iter().map(|v| v.to_bits()).collect::<Vec<u64>>();
    let cache: Mutex<HashMap<Vec<u64>, CoeffGrid>> = Mutex::new(HashMap::new());
    let solve = |r: &[f64]| -> fpt_core::Result<CoeffGrid> {
        if let Some(e) = cache.lock().unwrap().get(&key(r)) {
            return Ok(e.clone());
        }
        let e = model.instantiate(r, &opts)?.solve(mesh)?.e;
        cache.lock().unwrap().insert(key(r), e.clone());
        Ok(e)
    };

    let axis = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let mut test_set = Vec::new();
    for a in axis {
        for b in axis {
            for c in axis {
                test_set.push(vec![a, b, c]);
            }
        }
    }
    let per_point: Vec<(Instance, CoeffGrid, NormSystem)> = Exec::default().map_slice(&test_set, |r| {
        let inst = model.instantiate(r, &opts).unwrap();
        let e = inst.solve(mesh).unwrap().e;
        let ns = inst.norm_system(mesh).unwrap();
        (inst, e, ns)
    });

    let qs: Vec<usize> = (3..=7).collect();
    let mut errs = Vec::new();
    for &q in &qs {
        let si = build_interpolant(3, q, solve, Exec::default()).unwrap();
        let worst = test_set
            .iter()
            .zip(&per_point)
            .map(|(r, (_, e, ns))| xnorm(&e.sub(&si.eval(r).unwrap()), ns).unwrap())
            .fold(0.0, f64::max);
        errs.push(worst);
    }
    let disc = Exec::default()
        .map_slice(&per_point, |(inst, e, _)| {
            let fine_mesh = Mesh::dyadic(6).unwrap();
            let fine = inst.solve(fine_mesh).unwrap().e;
            xnorm(&fine.sub(&e.prolong(fine_mesh.n).unwrap()), &inst.norm_system(fine_mesh).unwrap()).unwrap()
        })
        .into_iter()
        .fold(0.0, f64::max);
    let monotone = errs.windows(2).all(|w| w[1] <= 1.5 * w[0]);
    let last = *errs.last().unwrap();
    let detail = qs.iter().zip(&errs).map(|(q, e)| format!("q={q}:{e:.3e}")).collect::<Vec<_>>().join(" ");
    report(7, monotone && last <= 10.0 * disc, format!("{detail} disc(h=2^-5)={disc:.3e}"));
}

#[test]
fn criterion_8_transform() {
    let (sigma, beta0, t0, tilde_end) = (1.0, 1.0, 3.0, 0.5);
    let scale = sigma * t0;
    let lower = (beta0 * tilde_end / scale, -beta0 / scale);
    let upper = (beta0 * (1.0 - tilde_end / scale), beta0 / scale);
    let affine = TildeProblem::new(
        Boundary::affine(lower.0, lower.1),
        Boundary::affine(upper.0, upper.1),
        Drift::constant(0.0),
        tilde_end,
    )
    .unwrap();
    let general = TildeProblem::new(
        Boundary::general(move |s| lower.0 + lower.1 * s, move |_| lower.1),
        Boundary::general(move |s| upper.0 + upper.1 * s, move |_| upper.1),
        Drift::constant(0.0),
        tilde_end,
    )
    .unwrap();
    let tight = TimeChangeOptions { ode_tol: 1e-13, ..Default::default() };
    let closed = solve_time_change(&affine, &tight).unwrap();
    let ode = solve_time_change(&general, &tight).unwrap();
    assert!(closed.is_analytic() && !ode.is_analytic());
    let formula = sigma * t0 * tilde_end / (beta0 * beta0 * (sigma * t0 - 2.0 * tilde_end));
    let end_diff = (closed.end_time() - ode.end_time()).abs();
    let theta_diff = (0..=100)
        .map(|k| {
            let t = closed.end_time() * k as f64 / 100.0;
            (closed.theta(t) - ode.theta(t)).abs()
        })
        .fold(0.0, f64::max);
    let pass = end_diff <= 1e-10
        && theta_diff <= 1e-10
        && (closed.end_time() - 0.75).abs() <= 1e-14
        && (formula - 0.75).abs() <= 1e-14;
    report(8, pass, format!("T={} |dT|={end_diff:.1e} max|dtheta|={theta_diff:.1e}", closed.end_time()));
}

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fpt_core::fem::{assemble, assemble_rhs, Mesh};
use fpt_core::models::{Model, ModelFamily};
use fpt_core::oracles::{mc_first_hit, McConfig};
use fpt_core::pipeline::PipelineOptions;
use fpt_core::sparsegrid::build_interpolant;
use fpt_core::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn monte_carlo(c: &mut Criterion) {
    let model = Model::new(ModelFamily::Hyperbolic);
    let fp = model.fp_problem(&[0.0; 5]).unwrap();
    let y = 0.5 * fp.upper.value(0.0);
    let cfg = McConfig { paths: 16_384, dt: 1e-3, seed: 1, bridge: true };
    let mut group = c.benchmark_group("mc_first_hit");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| mc_first_hit(black_box(&fp), y, &cfg, exec).unwrap())
        });
    }
    group.finish();
}

fn assembly(c: &mut Criterion) {
    let model = Model::new(ModelFamily::Collapsing);
    let mut group = c.benchmark_group("assemble_n64");
    group.sample_size(10);
    for (name, exec) in MODES {
        let opts = PipelineOptions { exec, ..Default::default() };
        let inst = model.instantiate(&[0.0; 4], &opts).unwrap();
        group.bench_function(name, |b| {
            b.iter(|| {
                let mut sys =
                    assemble(&inst.problem, inst.end_time(), Mesh::dyadic(6).unwrap(), 0.0, &opts.quad, exec).unwrap();
                assemble_rhs(&mut sys, &inst.refsol, &inst.problem, &opts.quad).unwrap();
                sys
            })
        });
    }
    group.finish();
}

fn sparse_build(c: &mut Criterion) {
    let model = Model::new(ModelFamily::LinearDrift);
    let mut group = c.benchmark_group("sparse_build_q5_n16");
    group.sample_size(10);
    for (name, exec) in MODES {
        // inner solves stay sequential so only the point loop differs
        let opts = PipelineOptions { exec: Exec::Sequential, ..Default::default() };
        group.bench_function(name, |b| {
            b.iter(|| {
                build_interpolant(3, 5, |r| Ok(model.instantiate(r, &opts)?.solve(Mesh::dyadic(4)?)?.e), exec).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, monte_carlo, assembly, sparse_build);
criterion_main!(benches);

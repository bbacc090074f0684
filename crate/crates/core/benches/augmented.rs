//! Cost and gradient of the augmented system, sequential against rayon.
//! Without the `parallel` feature both arms run sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use slc_core::exec::ExecMode;
use slc_core::experiments::{ExperimentId, ExperimentSpec};
use std::hint::black_box;

fn systems() -> Vec<(String, ExperimentSpec)> {
    let mut out = Vec::new();
    for id in [
        ExperimentId::VtypeTimevarying,
        ExperimentId::Supercond,
        ExperimentId::Cavity,
    ] {
        out.push((id.to_string(), ExperimentSpec::build(id).unwrap()));
    }
    let reduced = ExperimentSpec::build(ExperimentId::Supercond)
        .unwrap()
        .with_grid_count(2, 1)
        .unwrap();
    out.push(("supercond_reduced".into(), reduced));
    out
}

fn evaluate(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate");
    group.sample_size(10);
    for (name, spec) in systems() {
        let u = spec.initial_controls().unwrap();
        for mode in [ExecMode::Sequential, ExecMode::Parallel] {
            let sys = spec.augmented_system().unwrap().with_exec(mode);
            let label = format!("{mode:?}").to_lowercase();
            group.bench_with_input(BenchmarkId::new(label, &name), &u, |b, u| {
                b.iter(|| black_box(sys.evaluate(u).unwrap()))
            });
        }
    }
    group.finish();
}

fn performance(c: &mut Criterion) {
    let mut group = c.benchmark_group("performance");
    group.sample_size(10);
    let spec = ExperimentSpec::build(ExperimentId::Supercond).unwrap();
    let u = spec.initial_controls().unwrap();
    for mode in [ExecMode::Sequential, ExecMode::Parallel] {
        let sys = spec.augmented_system().unwrap().with_exec(mode);
        group.bench_function(format!("{mode:?}").to_lowercase(), |b| {
            b.iter(|| black_box(sys.performance(&u).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, evaluate, performance);
criterion_main!(benches);

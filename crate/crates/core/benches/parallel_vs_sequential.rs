//! Sequential vs rayon execution of the data-parallel kernels.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use scas_admm::data::{build_correlation_graph, synth_problem, SynthSpec};
use scas_admm::exec::Exec;

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn kernels(c: &mut Criterion) {
    for &(n, p) in &[(2_000usize, 50usize), (20_000, 100)] {
        let (prob, _) = synth_problem(&SynthSpec::new(p, n, p / 2, 1)).expect("synthetic problem");
        let x: Vec<f64> = (0..p).map(|j| ((j as f64) * 0.37).sin()).collect();
        let y = prob.constraint().a().matvec(&x).expect("A x");
        let size = format!("n{n}_p{p}");

        let mut group = c.benchmark_group("full_grad");
        for (name, exec) in POLICIES {
            group.bench_with_input(BenchmarkId::new(name, &size), &exec, |b, &e| {
                b.iter(|| prob.full_grad_with(e, black_box(&x)).unwrap())
            });
        }
        group.finish();

        let mut group = c.benchmark_group("objective");
        for (name, exec) in POLICIES {
            group.bench_with_input(BenchmarkId::new(name, &size), &exec, |b, &e| {
                b.iter(|| prob.objective_with(e, black_box(&x), black_box(&y)).unwrap())
            });
        }
        group.finish();

        let features = prob.samples().features();
        let mut group = c.benchmark_group("matvec");
        for (name, exec) in POLICIES {
            group.bench_with_input(BenchmarkId::new(name, &size), &exec, |b, &e| {
                b.iter(|| features.matvec_with(e, black_box(&x)).unwrap())
            });
        }
        group.finish();

        let mut group = c.benchmark_group("correlation_graph");
        group.sample_size(10);
        for (name, exec) in POLICIES {
            group.bench_with_input(BenchmarkId::new(name, &size), &exec, |b, &e| {
                b.iter(|| build_correlation_graph(black_box(prob.samples()), 0.5, e))
            });
        }
        group.finish();
    }
}

criterion_group!(benches, kernels);
criterion_main!(benches);

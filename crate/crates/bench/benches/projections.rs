use std::hint::black_box;

use cbggp_bench::problem;
use cbggp_core::{generalized_project, DistanceSpec, FeasibleSet, MetricFamily, MetricSpec};
use cbggp_problems::ProblemSpec;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn sets(c: &mut Criterion) {
    let mut group = c.benchmark_group("euclidean_project");
    for n in [10, 100, 1000] {
        let u: Vec<f64> = (0..n).map(|j| ((j * 7919) % 113) as f64 / 50.0 - 1.0).collect();
        let simplex = FeasibleSet::simplex(n, 1.0).unwrap();
        let cube = FeasibleSet::cube(n, 0.0, 1.0).unwrap();
        let ball = FeasibleSet::ball(vec![0.0; n], 1.0).unwrap();
        group.bench_with_input(BenchmarkId::new("simplex", n), &u, |b, u| b.iter(|| simplex.euclidean_project(black_box(u))));
        group.bench_with_input(BenchmarkId::new("box", n), &u, |b, u| b.iter(|| cube.euclidean_project(black_box(u))));
        group.bench_with_input(BenchmarkId::new("ball", n), &u, |b, u| b.iter(|| ball.euclidean_project(black_box(u))));
    }
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let built = problem(ProblemSpec::BoxQuadratic { n: 40, m: 4, kappa: 10.0, seed: 1 });
    let pr = &built.problem;
    let y = &built.start;
    let specs = [
        ("euclidean", MetricSpec::euclidean(0.5)),
        ("scaled", MetricSpec::linearized(DistanceSpec::Scaled { alpha: 0.5, diag: vec![1.5; 10] })),
        ("entropy", MetricSpec::linearized(DistanceSpec::BregmanEntropy { sigma: 0.5 })),
        ("prox", MetricSpec::new(MetricFamily::Proximity, DistanceSpec::Euclidean { sigma: 0.5 })),
        ("proxgrad", MetricSpec::new(MetricFamily::ProximalGradient, DistanceSpec::Euclidean { sigma: 0.5 })),
    ];
    let mut group = c.benchmark_group("generalized_project");
    for (name, spec) in &specs {
        group.bench_function(*name, |b| b.iter(|| generalized_project(black_box(spec), pr, y, 1).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, sets, metrics);
criterion_main!(benches);

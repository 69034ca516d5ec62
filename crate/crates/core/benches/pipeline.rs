use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use twinbeam::{
    conditional_distribution, gamma_profile, noise_reduction, AnalysisOptions, Exec, Experiment,
};

const MODES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn simulate(c: &mut Criterion) {
    let exp = Experiment::operating_point();
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    for shots in [10_000usize, 100_000] {
        group.throughput(Throughput::Elements(shots as u64));
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, shots), &shots, |b, &n| {
                b.iter(|| exp.simulate(n, black_box(7), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn analyze(c: &mut Criterion) {
    let exp = Experiment::operating_point();
    let shots = 200_000;
    let mut group = c.benchmark_group("analyze");
    group.sample_size(20);
    group.throughput(Throughput::Elements(shots as u64));
    for (name, exec) in MODES {
        let series = exp.simulate_with_dark(shots, shots, 3, exec).unwrap();
        let options = AnalysisOptions::default();
        group.bench_function(BenchmarkId::new("noise_reduction", name), |b| {
            b.iter(|| noise_reduction(black_box(&series), &options).unwrap())
        });
        group.bench_function(BenchmarkId::new("gamma_profile", name), |b| {
            b.iter(|| gamma_profile(black_box(&series), 10, true).unwrap())
        });
        group.bench_function(BenchmarkId::new("conditional", name), |b| {
            b.iter(|| {
                conditional_distribution(black_box(&series), (500.0, 560.0), &options).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, simulate, analyze);
criterion_main!(benches);

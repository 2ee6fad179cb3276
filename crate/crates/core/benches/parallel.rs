use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pqready_core::exposure::ExposureModel;
use pqready_core::shapley::{exact_from_model, mc_from_model};
use pqready_core::synth::{experiment_correlation, generate_graph, mc_compromise_with, readiness_sweep, GenSpec};
use pqready_core::{Execution, Mode, ScoringConfig};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn oracle(c: &mut Criterion) {
    let g = generate_graph(&GenSpec { nodes: 60, ..GenSpec::default().with_seed(1) }).unwrap();
    let cfg = ScoringConfig::from_graph(&g).unwrap();
    let mut group = c.benchmark_group("mc_compromise_100k");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| mc_compromise_with(&g, &cfg, 100_000, 7, exec).unwrap())
        });
    }
    group.finish();
}

fn shapley(c: &mut Criterion) {
    let g = generate_graph(&GenSpec {
        nodes: 200,
        density: 0.02,
        domains: 8,
        acyclic: false,
        ..GenSpec::default().with_seed(2)
    })
    .unwrap();
    let cfg = ScoringConfig::from_graph(&g).unwrap().with_mode(Mode::Katz);
    let model = ExposureModel::prepare(&g, &cfg).unwrap();
    let mut group = c.benchmark_group("shapley_katz_200");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new("exact", name), |b| {
            b.iter(|| exact_from_model(&model, &cfg.domains, exec).unwrap())
        });
        group.bench_function(BenchmarkId::new("monte_carlo", name), |b| {
            b.iter(|| mc_from_model(&model, &cfg.domains, 640, 3, exec).unwrap())
        });
    }
    group.finish();
}

fn correlation(c: &mut Criterion) {
    let specs = readiness_sweep(&GenSpec::default());
    let seeds: Vec<u64> = (0..10).collect();
    let mut group = c.benchmark_group("correlation_50");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| experiment_correlation(&specs, &seeds, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, oracle, shapley, correlation);
criterion_main!(benches);

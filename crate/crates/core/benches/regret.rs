use banditlab::environments::{eps_uniform_instance, flower_instance};
use banditlab::harness::{estimate_regret_with, Execution, ExperimentConfig, LearnerKind};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn configs() -> Vec<(&'static str, ExperimentConfig)> {
    let flower = flower_instance(4, 5, 3, 2_000).unwrap();
    let eps = eps_uniform_instance(6, 0.3, 1_000).unwrap();
    vec![
        (
            "exp4_flower",
            ExperimentConfig::for_instance(LearnerKind::Exp4, flower, 8, 1),
        ),
        (
            "osmd_eps",
            ExperimentConfig::for_instance(LearnerKind::Osmd, eps, 4, 1),
        ),
    ]
}

fn monte_carlo(c: &mut Criterion) {
    let mut group = c.benchmark_group("regret");
    group.sample_size(10);
    for (name, cfg) in configs() {
        for (label, exec) in [
            ("sequential", Execution::Sequential),
            ("parallel", Execution::Parallel),
        ] {
            group.bench_with_input(BenchmarkId::new(name, label), &cfg, |b, cfg| {
                b.iter(|| black_box(estimate_regret_with(cfg, exec).unwrap().mean_regret))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, monte_carlo);
criterion_main!(benches);

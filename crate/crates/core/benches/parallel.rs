use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use divisio::channels::{dephasing_t, random_channel, seeded_rng};
use divisio::diamond::probe_lower_bound;
use divisio::divisibility::{multi_step, Kind};
use divisio::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn family(c: &mut Criterion) {
    let maps: Vec<_> = (0..9).map(|i| dephasing_t(0.4 * i as f64).unwrap()).collect();
    let mut group = c.benchmark_group("multi_step_dephasing");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| multi_step(&maps, Kind::Cp, exec).unwrap())
        });
    }
    group.finish();
}

fn probes(c: &mut Criterion) {
    let mut rng = seeded_rng(3);
    let a = random_channel(3, 3, 2, &mut rng).unwrap();
    let b = random_channel(3, 3, 2, &mut rng).unwrap();
    let diff = a.difference(&b).unwrap();
    let mut group = c.benchmark_group("probe_lower_bound");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |bench, &exec| {
            bench.iter(|| probe_lower_bound(&diff, 2000, &mut seeded_rng(7), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, family, probes);
criterion_main!(benches);

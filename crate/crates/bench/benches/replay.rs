use chanprobe_core::{
    generate_matrix, run_exhaustive, run_selective, sweep, MeasurementTiming, SelectionPolicy,
    SelectiveConfig, TrafficModel,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_replay(c: &mut Criterion) {
    let timing = MeasurementTiming::default();
    let matrix = generate_matrix(&TrafficModel::reference(), 50, &timing).unwrap();

    c.bench_function("run_exhaustive", |b| {
        b.iter(|| run_exhaustive(&matrix, &timing).unwrap())
    });

    let mut group = c.benchmark_group("run_selective");
    for policy in SelectionPolicy::ALL {
        let config = SelectiveConfig::new(7, 2, policy);
        group.bench_function(BenchmarkId::from_parameter(policy), |b| {
            b.iter(|| run_selective(&matrix, &timing, &config).unwrap())
        });
    }
    group.finish();

    let ks: Vec<usize> = (2..=10).collect();
    let base = SelectiveConfig::new(1, 1, SelectionPolicy::WeightProduct);
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("K2..10_w2..4_all", |b| {
        b.iter(|| {
            sweep(
                &matrix,
                &timing,
                &ks,
                &[2, 3, 4],
                &SelectionPolicy::ALL,
                &base,
            )
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_replay);
criterion_main!(benches);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use hotspot_pricing::{mc_benchmark_cost, mc_expected_cost_het, mc_expected_cost_hom, mc_expected_cost_mul, presets};

const SEED: u64 = 0x5EED_2018;

fn monte_carlo(c: &mut Criterion) {
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    for n in [10_000u64, 100_000] {
        group.throughput(Throughput::Elements(n));
        let base = presets::baseline();
        group.bench_with_input(BenchmarkId::new("hom", n), &n, |b, &n| {
            b.iter(|| mc_expected_cost_hom(black_box(0.5), &base, n, SEED))
        });
        group.bench_with_input(BenchmarkId::new("benchmark", n), &n, |b, &n| {
            b.iter(|| mc_benchmark_cost(&base, n, SEED))
        });
        let het = presets::two_type(2.0, 2.4);
        group.bench_with_input(BenchmarkId::new("het", n), &n, |b, &n| {
            b.iter(|| mc_expected_cost_het(black_box(0.2), &het, n, SEED))
        });
        let mul = presets::overlap(1e-3);
        group.bench_with_input(BenchmarkId::new("mul", n), &n, |b, &n| {
            b.iter(|| mc_expected_cost_mul(black_box(1.2), &mul, n, SEED))
        });
    }
    group.finish();
}

criterion_group!(benches, monte_carlo);
criterion_main!(benches);

//! Sequential vs rayon throughput on the embarrassingly parallel workloads:
//! figure rows (one adaptive series per index) and the bounded-example
//! column-norm scan. Run with `cargo bench` (parallel feature on by default)
//! to compare both paths on the same build.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use eigenderiv::builtin::{figure_data_with_parallelism, ExampleId};
use eigenderiv::TruncationPolicy;

fn bench_figure_rows(c: &mut Criterion) {
    let policy = TruncationPolicy::default().with_max_terms(1 << 16);
    let mut group = c.benchmark_group("figure_rows_example2_1_to_32");
    for (label, parallel) in [("sequential", false), ("parallel", true)] {
        group.bench_with_input(BenchmarkId::from_parameter(label), &parallel, |b, &p| {
            b.iter(|| figure_data_with_parallelism(ExampleId::Example2, 1, 32, &policy, p));
        });
    }
    group.finish();
}

fn bench_figure_rows_heavy(c: &mut Criterion) {
    let policy = TruncationPolicy::default().with_max_terms(1 << 18);
    let mut group = c.benchmark_group("figure_rows_example1_1_to_16");
    group.sample_size(10);
    for (label, parallel) in [("sequential", false), ("parallel", true)] {
        group.bench_with_input(BenchmarkId::from_parameter(label), &parallel, |b, &p| {
            b.iter(|| figure_data_with_parallelism(ExampleId::Example1, 1, 16, &policy, p));
        });
    }
    group.finish();
}

criterion_group!(benches, bench_figure_rows, bench_figure_rows_heavy);
criterion_main!(benches);

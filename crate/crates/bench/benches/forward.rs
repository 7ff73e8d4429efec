use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use eqnn::model::{self, CompiledNetwork};
use eqnn::Topology;

fn genome(len: usize) -> Vec<f64> {
    (0..len).map(|i| (i as f64 * 0.37).sin() * 2.0).collect()
}

fn window(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 + 0.4 * (i as f64 * 0.9).cos()).collect()
}

fn forward(c: &mut Criterion) {
    let mut group = c.benchmark_group("forward");
    for (n, p) in [(7, 4), (10, 7), (25, 18)] {
        let topo = Topology::new(n, p).unwrap();
        let g = genome(topo.genome_length());
        let w = window(n);
        let compiled = CompiledNetwork::new(&g, topo).unwrap();
        group.bench_with_input(
            BenchmarkId::new("compiled", format!("{n}-{p}")),
            &w,
            |b, w| b.iter(|| compiled.predict(black_box(w)).unwrap()),
        );
        group.bench_with_input(
            BenchmarkId::new("layerwise", format!("{n}-{p}")),
            &w,
            |b, w| b.iter(|| model::predict(black_box(&g), topo, black_box(w)).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, forward);
criterion_main!(benches);

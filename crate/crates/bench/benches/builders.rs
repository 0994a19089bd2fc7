use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use proxnet_core::geom::sample_uniform;
use proxnet_core::graphs::{build, NetworkKind};
use proxnet_core::robust::{robust_subnetwork, RobustRule};
use proxnet_core::routes::max_stretch;
use proxnet_core::Window;

fn uniform(n: usize) -> proxnet_core::Configuration {
    sample_uniform(Window::square((n as f64).sqrt()).unwrap(), n, 42).unwrap()
}

fn builders(c: &mut Criterion) {
    let mut group = c.benchmark_group("build");
    for n in [1_000, 10_000] {
        let config = uniform(n);
        for kind in [NetworkKind::Delaunay, NetworkKind::Rng, NetworkKind::Gabriel, NetworkKind::Mst] {
            group.bench_with_input(BenchmarkId::new(kind.to_string(), n), &config, |b, cfg| {
                b.iter(|| build(black_box(cfg), kind).unwrap())
            });
        }
    }
    group.finish();
}

fn robust(c: &mut Criterion) {
    let config = uniform(1_600);
    c.bench_function("robust_subnetwork/rng/L=40", |b| {
        b.iter(|| robust_subnetwork(black_box(&config), RobustRule::Rng).unwrap())
    });
}

fn stretch(c: &mut Criterion) {
    let config = uniform(500);
    let net = build(&config, NetworkKind::Delaunay).unwrap();
    c.bench_function("max_stretch/delaunay/500", |b| {
        b.iter(|| max_stretch(black_box(&net), &config).unwrap())
    });
}

criterion_group!(benches, builders, robust, stretch);
criterion_main!(benches);

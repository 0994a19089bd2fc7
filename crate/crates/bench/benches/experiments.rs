use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use proxnet_core::chains::{decreasing_chain_probability, DEFAULT_WORK_CAP};
use proxnet_core::perc::{synthetic_site_field, t_statistic, Mechanism, TiltedLattice};
use proxnet_core::routes::planted_pair_sample;
use proxnet_core::NetworkKind;

fn planted(c: &mut Criterion) {
    c.bench_function("planted_pair/rng/r=30", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            planted_pair_sample(NetworkKind::Rng, 30.0, 35.0, black_box(seed)).unwrap()
        })
    });
}

fn percolation(c: &mut Criterion) {
    let lattice = TiltedLattice::new(50, 100).unwrap();
    let field = synthetic_site_field(lattice, 0.95, Mechanism::Independent, 7).unwrap();
    c.bench_function("t_statistic/50x100", |b| b.iter(|| t_statistic(black_box(&field))));
}

fn chains(c: &mut Criterion) {
    c.bench_function("decreasing_chain/L=10,n=5,d0=0.5,x20", |b| {
        b.iter(|| decreasing_chain_probability(10.0, 0.5, 5, 1.0, 20, black_box(3), DEFAULT_WORK_CAP).unwrap())
    });
}

criterion_group!(benches, planted, percolation, chains);
criterion_main!(benches);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kbayes::filtering::{decode, weighted_mean};
use kbayes_bench::{filter_model, trajectory};

fn filter_steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("filter_step");
    group.sample_size(10);
    for n in [200, 500] {
        let model = filter_model(n);
        let test = trajectory(2, 9);
        let state = model.init_state(test.observations.row(0)).unwrap();
        let beta = model.predict_weights(&state).unwrap();
        let x = test.observations.row(1);
        group.bench_with_input(BenchmarkId::new("predict", n), &n, |b, _| {
            b.iter(|| model.predict_weights(black_box(&state)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("pkbr_update", n), &n, |b, _| {
            b.iter(|| model.update(black_box(&beta), x).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("kbr_update", n), &n, |b, _| {
            b.iter(|| model.update_kbr(black_box(&beta), x, false).unwrap())
        });
        let belief = model.belief(&model.update(&beta, x).unwrap()).unwrap();
        let init = weighted_mean(&belief);
        group.bench_with_input(BenchmarkId::new("decode", n), &n, |b, _| {
            b.iter(|| decode(black_box(&belief), &init).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, filter_steps);
criterion_main!(benches);

use std::hint::black_box;

use afshar_bench::{canonical, source};
use afshar_core::photon::sample_outcomes;
use afshar_core::{apply_wire_grid, image_through_lens, propagate_unguarded, OutcomeProbabilities};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn propagation(c: &mut Criterion) {
    let mut group = c.benchmark_group("propagate");
    group.sample_size(10);
    for n in [256, 1024, 2048] {
        let src = source(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &src, |b, src| {
            b.iter(|| propagate_unguarded(black_box(src), 0.5).unwrap())
        });
    }
    group.finish();
}

fn wire_grid(c: &mut Criterion) {
    let a = canonical();
    let at_grid = propagate_unguarded(&source(a.geometry.nx), a.grid_plane_z).unwrap();
    let spec = a.wire_grid(0.0).unwrap();
    let mut group = c.benchmark_group("mask");
    group.sample_size(10);
    group.bench_function("canonical", |b| b.iter(|| apply_wire_grid(black_box(&at_grid), &spec).unwrap()));
    group.finish();
}

fn lens(c: &mut Criterion) {
    let a = canonical();
    let at_grid = propagate_unguarded(&source(a.geometry.nx), a.grid_plane_z).unwrap();
    let mut group = c.benchmark_group("lens");
    group.sample_size(10);
    group.bench_function("canonical", |b| b.iter(|| image_through_lens(black_box(&at_grid), &a.lens).unwrap()));
    group.finish();
}

fn photons(c: &mut Criterion) {
    let p = OutcomeProbabilities::new([0.8233, 0.00288, 0.04997, 0.12385]).unwrap();
    let mut group = c.benchmark_group("sample_outcomes");
    for n in [900_000u64, 90_000_000] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| b.iter(|| sample_outcomes(n, &p, 1)));
    }
    group.finish();
}

criterion_group!(benches, propagation, wire_grid, lens, photons);
criterion_main!(benches);

//! Hot-path benchmarks: the dense cell exponential, the QR cocycle step,
//! the bracket closure and the full-box shooting determinant.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use dirac_loc_bench::{case2_strip, case5_strip, single_line};
use dirac_loc_core::expm::expm;
use dirac_loc_core::liealgebra::{generate_algebra, vertex_generators, CLOSURE_TOL};
use dirac_loc_core::lyapunov::lyapunov_spectrum;
use dirac_loc_core::model::{sample_word, ModelSpec};
use dirac_loc_core::spectrum::{boundary_determinant, BoxSpec};
use nalgebra::DVector;

fn bench_cell_exponential(c: &mut Criterion) {
    let mut group = c.benchmark_group("cell_transfer");
    for n in [1usize, 2, 4] {
        let spec = case2_strip(n);
        let omega = DVector::from_fn(n, |i, _| (i % 2) as f64);
        let gen = spec.generator(&omega, 1.0).unwrap() * spec.ell;
        group.bench_with_input(BenchmarkId::new("expm", 2 * n), &gen, |b, g| {
            b.iter(|| black_box(expm(g)))
        });
    }
    group.finish();
}

fn bench_cocycle(c: &mut Criterion) {
    let mut group = c.benchmark_group("lyapunov");
    group.sample_size(10);
    for n in [1usize, 2, 4] {
        let spec = case2_strip(n);
        group.bench_with_input(BenchmarkId::new("10k_steps", 2 * n), &spec, |b, s| {
            b.iter(|| black_box(lyapunov_spectrum(s, 1.0, 10_000, 3, 1).unwrap()))
        });
    }
    let spec = case2_strip(2);
    for period in [1usize, 4, 16] {
        group.bench_with_input(BenchmarkId::new("reorth_period", period), &period, |b, &p| {
            b.iter(|| black_box(lyapunov_spectrum(&spec, 1.0, 10_000, 3, p).unwrap()))
        });
    }
    group.finish();
}

fn bench_closure(c: &mut Criterion) {
    let mut group = c.benchmark_group("lie_closure");
    let sp = case2_strip(2);
    let gens_sp = vertex_generators(&sp, 1.0).unwrap();
    group.bench_function("case2_n2", |b| {
        b.iter(|| black_box(generate_algebra(&gens_sp, CLOSURE_TOL, 17).unwrap()))
    });
    let spo = case5_strip(4);
    let gens_spo = vertex_generators(&spo, 1.0).unwrap();
    group.bench_function("case5_n4", |b| {
        b.iter(|| black_box(generate_algebra(&gens_spo, CLOSURE_TOL, 65).unwrap()))
    });
    group.finish();
}

fn bench_shooting(c: &mut Criterion) {
    let mut group = c.benchmark_group("shooting");
    let spec: ModelSpec = single_line();
    let b100 = BoxSpec::centered(100);
    let (lo, hi) = b100.cells();
    let word = sample_word(&spec, 5, lo, hi).unwrap();
    group.bench_function("determinant_L100", |b| {
        b.iter(|| black_box(boundary_determinant(&spec, &word, &b100, 0.93).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, bench_cell_exponential, bench_cocycle, bench_closure, bench_shooting);
criterion_main!(benches);

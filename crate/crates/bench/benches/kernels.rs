use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pmfront::counterexample::{datum_from_n, vt_origin};
use pmfront::solvers::{rhs_fbp1, rhs_pm1d, rhs_pm_radial};
use pmfront::{integrate, Boundary, Grid1D, Model, NonlinearityProfile, Preset, RunConfig};

fn nonlinearity(c: &mut Criterion) {
    let p = NonlinearityProfile::perona_malik();
    c.bench_function("h_inverse", |b| b.iter(|| p.h_inverse(black_box(0.3)).unwrap()));
    c.bench_function("coeff_g", |b| b.iter(|| p.coeff_g(black_box(0.2)).unwrap()));
    c.bench_function("potential_round_trip", |b| {
        b.iter(|| p.from_potential(p.potential(black_box(0.2)).unwrap()).unwrap())
    });
}

fn right_hand_sides(c: &mut Criterion) {
    let p = NonlinearityProfile::perona_malik();
    let mut group = c.benchmark_group("rhs");
    for n in [200, 800] {
        let grid = Grid1D::new(0.0, 1.0, n).unwrap();
        let u = Preset::Sine { max_slope: 1.5 }.sample(grid).unwrap();
        group.bench_with_input(BenchmarkId::new("pm1d", n), &u, |b, u| {
            b.iter(|| rhs_pm1d(u, &p, Boundary::Neumann).unwrap())
        });
        let radial = Preset::Sine { max_slope: 1.5 }.sample(Grid1D::radial(0.5, 1.5, n).unwrap()).unwrap();
        group.bench_with_input(BenchmarkId::new("pm_radial", n), &radial, |b, u| {
            b.iter(|| rhs_pm_radial(u, &p, 2, Boundary::Neumann).unwrap())
        });
        let v = Preset::Bump { left: 0.3, right: 0.7, amplitude: 0.25 }.sample(grid).unwrap();
        group.bench_with_input(BenchmarkId::new("fbp1", n), &v, |b, v| {
            b.iter(|| rhs_fbp1(v, &p, Boundary::Neumann).unwrap())
        });
    }
    group.finish();
}

fn integration(c: &mut Criterion) {
    let p = NonlinearityProfile::perona_malik();
    let grid = Grid1D::new(0.0, 1.0, 100).unwrap();
    let u = Preset::Sine { max_slope: 1.5 }.sample(grid).unwrap();
    let cfg = RunConfig::new(Model::Pm1d, 0.01, 0.005);
    let mut group = c.benchmark_group("integrate");
    group.sample_size(10);
    group.bench_function("pm1d_n100_t0.01", |b| b.iter(|| integrate(u.clone(), cfg, &p).unwrap()));
    group.finish();
}

fn counterexample(c: &mut Criterion) {
    let p = NonlinearityProfile::perona_malik();
    let d = datum_from_n(4);
    c.bench_function("vt_origin", |b| b.iter(|| vt_origin(black_box(&d), &p).unwrap()));
}

criterion_group!(benches, nonlinearity, right_hand_sides, integration, counterexample);
criterion_main!(benches);

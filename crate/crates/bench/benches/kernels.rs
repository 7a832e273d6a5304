use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use hh_core::htransform::{forward, forward_at, inverse};
use hh_core::restriction::{g_function, restrict_sphere, RestrictOptions, SphereMeasure};
use hh_core::specfun::laguerre_weighted;
use hh_core::twisted::{twisted_convolve, PlanarField, PlanarGrid};
use hh_core::{GaussianPacket, Grid};

fn transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("transform");
    group.sample_size(10);
    for n_rho in [64, 128, 256] {
        let g = Grid::new(1, n_rho, 12.0, 512, 40.0);
        let f = GaussianPacket::new(1.0, 4.0, 2.0).field(&g);
        group.bench_with_input(BenchmarkId::new("forward", n_rho), &f, |b, f| {
            b.iter(|| forward(black_box(f), 64))
        });
        let theta = forward(&f, 64);
        group.bench_with_input(BenchmarkId::new("inverse", n_rho), &theta, |b, t| {
            b.iter(|| inverse(black_box(t)))
        });
    }
    let g = Grid::new(1, 128, 12.0, 512, 40.0);
    let f = GaussianPacket::new(1.0, 4.0, 2.0).field(&g);
    group.bench_function("forward_at", |b| b.iter(|| forward_at(black_box(&f), 0.37, 64)));
    group.finish();
}

fn special(c: &mut Criterion) {
    let mut buf = vec![0.0; 257];
    c.bench_function("laguerre_weighted_256", |b| {
        b.iter(|| laguerre_weighted(0.0, black_box(3.7), 0.0, &mut buf))
    });
    c.bench_function("g_function_256", |b| {
        b.iter(|| g_function(black_box(1.3), black_box(0.7), 1, 256))
    });
}

fn restriction(c: &mut Criterion) {
    let g = Grid::new(1, 64, 8.0, 128, 16.0);
    let f = GaussianPacket::new(1.0, 2.0, 0.5).field(&g);
    let opts = RestrictOptions {
        l_max: 32,
        edge_tolerance: 1e-6,
    };
    c.bench_function("restrict_sphere_l32", |b| {
        b.iter(|| restrict_sphere(black_box(&f), &SphereMeasure::unit(), &opts))
    });
}

fn twisted(c: &mut Criterion) {
    let mut group = c.benchmark_group("twisted_convolve");
    group.sample_size(10);
    for n in [32, 64] {
        let grid = PlanarGrid { n, half_width: 8.0 };
        let f = PlanarField::laguerre(grid, 1, 1.0);
        let h = PlanarField::laguerre(grid, 2, 1.0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &(f, h), |b, (f, h)| {
            b.iter(|| twisted_convolve(black_box(f), black_box(h), 1.0))
        });
    }
    group.finish();
}

criterion_group!(benches, transforms, special, restriction, twisted);
criterion_main!(benches);

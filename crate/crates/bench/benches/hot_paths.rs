//! Wall-clock tracking for the four paths everything else sits on:
//! one zeta evaluation, one flood fill, one polynomial fit, and one
//! discrepancy measurement (the inner step of every scan).

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use umlab_core::grid::{complement_labeling, dyadic_partition, Rect, RegionMask};
use umlab_core::lfun::{zeta_eval, DirichletSeriesSpec};
use umlab_core::polyfree::zero_free_approx_in_measure;
use umlab_core::reduction::SampledFunction;
use umlab_core::universality::measure_discrepancy_with_target;
use umlab_core::Complex64;

fn bench_zeta(c: &mut Criterion) {
    let mut group = c.benchmark_group("zeta_eval");
    group.sample_size(30);
    for t in [20.0, 100.0, 500.0] {
        group.bench_function(format!("t_{t}"), |b| {
            b.iter(|| zeta_eval(black_box(Complex64::new(0.5, t)), 1e-8).unwrap())
        });
    }
    group.finish();
}

fn bench_flood_fill(c: &mut Criterion) {
    let part = dyadic_partition(Rect::new(-1.0, -1.0, 1.0, 1.0).unwrap(), 7).unwrap();
    let annulus = RegionMask::from_center_predicate(part.grid, |z| {
        let r = z.norm();
        (0.3..=0.9).contains(&r)
    });
    c.bench_function("complement_labeling_256sq_annulus", |b| {
        b.iter(|| complement_labeling(black_box(&annulus)))
    });
}

fn bench_fit(c: &mut Criterion) {
    let part = dyadic_partition(Rect::new(0.0, 0.0, 1.0, 1.0).unwrap(), 5).unwrap();
    let g = SampledFunction::from_fn(RegionMask::full(part.grid), |z| z).unwrap();
    let mut group = c.benchmark_group("zero_free_fit");
    group.sample_size(20);
    group.bench_function("degree_20", |b| {
        b.iter(|| zero_free_approx_in_measure(black_box(&g), 0.1, 20).unwrap())
    });
    group.finish();
}

fn bench_scan_step(c: &mut Criterion) {
    let zeta = DirichletSeriesSpec::zeta();
    let part = dyadic_partition(Rect::new(0.7, 0.0, 0.8, 0.1).unwrap(), 5).unwrap();
    let mask = RegionMask::from_center_predicate(part.grid, |z| {
        (0.7..=0.8).contains(&z.re) && (0.0..=0.1).contains(&z.im)
    });
    let f = SampledFunction::from_fn(mask, |_| Complex64::new(1.0, 0.0)).unwrap();
    let mut group = c.benchmark_group("scan_step");
    group.sample_size(30);
    group.bench_function("measure_discrepancy", |b| {
        b.iter(|| {
            measure_discrepancy_with_target(&zeta, f.domain(), &f, black_box(1.1), 1.0, 0.1)
                .unwrap()
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_zeta,
    bench_flood_fill,
    bench_fit,
    bench_scan_step
);
criterion_main!(benches);

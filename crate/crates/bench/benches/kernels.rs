use campanato_core::carleson::{cm_constant, MeasureSpec};
use campanato_core::geom::{bergman_dist, mobius};
use campanato_core::holofun::{frac_deriv, homogeneous_expand, DEFAULT_TERM_LIMIT};
use campanato_core::lattice::canonical_atom;
use campanato_core::norms::{GridSpec, OscTable, PointTable, SupGrid};
use campanato_core::quad::adapted::AdaptConfig;
use campanato_core::quad::{ball_rule, integrate, sphere_rule, Weight};
use campanato_core::{CVec, Complex64, HoloFun, MultiIndex};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn geometry(cr: &mut Criterion) {
    let a = CVec::new([c(0.3, 0.1), c(-0.2, 0.4)]);
    let z = CVec::new([c(-0.5, 0.2), c(0.1, 0.6)]);
    cr.bench_function("mobius_n2", |b| b.iter(|| mobius(black_box(&a), black_box(&z)).unwrap()));
    cr.bench_function("bergman_dist_n2", |b| b.iter(|| bergman_dist(black_box(&a), black_box(&z)).unwrap()));
}

fn holomorphic(cr: &mut Criterion) {
    let mut p = HoloFun::zero(2);
    for (i, j) in [(0, 0), (1, 0), (0, 1), (2, 1), (3, 2), (5, 0)] {
        p.push_poly(c(1.0 / (1 + i + j) as f64, 0.2), MultiIndex::new([i, j]));
    }
    let atom = canonical_atom(&CVec::new([c(0.6, 0.0), c(0.0, 0.3)]), 0.25, 2).unwrap();
    let z = CVec::new([c(0.2, -0.3), c(0.4, 0.1)]);
    cr.bench_function("poly_inv_grad_sq", |b| b.iter(|| black_box(&p).inv_grad_sq(black_box(&z))));
    cr.bench_function("atom_inv_grad_sq", |b| b.iter(|| black_box(&atom).inv_grad_sq(black_box(&z))));
    cr.bench_function("frac_deriv_poly", |b| b.iter(|| frac_deriv(black_box(&p), 0.5, 1.0).unwrap()));
    cr.bench_function("homogeneous_expand_atom_k30", |b| b.iter(|| homogeneous_expand(black_box(&atom), 30, DEFAULT_TERM_LIMIT).unwrap()));
}

fn quadrature(cr: &mut Criterion) {
    let mut g = cr.benchmark_group("sphere_rule");
    for n in 1..=3 {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| b.iter(|| sphere_rule(n, 3, 11).unwrap()));
    }
    g.finish();
    let rule = ball_rule(2, 3, 5).unwrap();
    cr.bench_function("ball_integrate_power_weight", |b| {
        b.iter(|| integrate(|z| c(z[0].norm_sqr(), 0.0), black_box(&rule), Weight::Power(0.5)).unwrap())
    });
}

fn suprema(cr: &mut Criterion) {
    let cfg = AdaptConfig::for_level(1);
    let grid = SupGrid::build(1, &GridSpec::default_for(1), &[], 3).unwrap();
    let atoms: Vec<(f64, CVec)> = (0..10).map(|k| (0.1 * (k + 1) as f64, CVec::new([Complex64::from_polar(0.9, k as f64)]))).collect();
    let mu = MeasureSpec::discrete(1, atoms).unwrap();
    cr.bench_function("cm_constant_discrete_n1", |b| b.iter(|| cm_constant(black_box(&mu), 1.0, &grid, &cfg).unwrap()));

    let f = canonical_atom(&CVec::new([c(0.9, 0.0)]), 0.0, 1).unwrap();
    let small = SupGrid::build(1, &GridSpec { centers: 16, radii: 6, r_min: 0.01, r_max: 1.0, random: 0 }, &[], 3).unwrap();
    let mut g = cr.benchmark_group("norm_tables_n1");
    g.sample_size(10);
    g.bench_function("oscillation", |b| b.iter(|| OscTable::compute(black_box(&f), &small, &cfg).unwrap()));
    g.bench_function("mobius", |b| b.iter(|| PointTable::mobius(black_box(&f), &small, &cfg).unwrap()));
    g.bench_function("green", |b| b.iter(|| PointTable::green(black_box(&f), &small, &cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, geometry, holomorphic, quadrature, suprema);
criterion_main!(benches);

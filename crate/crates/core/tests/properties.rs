use campanato_core::carleson::{cm_constant, MeasureSpec};
use campanato_core::geom::{bergman_dist, mobius, poisson_kernel};
use campanato_core::holofun::{frac_deriv, frac_inv};
use campanato_core::lattice::synthesize;
use campanato_core::norms::{GridSpec, OscTable, PointTable, SupGrid};
use campanato_core::operators::symmetry_residual;
use campanato_core::quad::adapted::AdaptConfig;
use campanato_core::quad::{integrate, sphere_rule, Weight};
use campanato_core::{CVec, Complex64, HoloFun, MultiIndex};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A point of the ball of radius `rmax` in dimension `n`.
fn point(n: usize, rmax: f64) -> impl Strategy<Value = CVec> {
    (prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n), 0.0f64..1.0).prop_map(move |(xs, t)| {
        let v = CVec::new(xs.iter().map(|&(a, b)| c(a, b)));
        let norm = v.norm();
        if norm < 1e-9 {
            CVec::zeros(n)
        } else {
            v.scale(rmax * t / norm)
        }
    })
}

fn poly(n: usize) -> impl Strategy<Value = HoloFun> {
    prop::collection::vec((prop::collection::vec(0u32..4, n), -1.0f64..1.0, -1.0f64..1.0), 1..6).prop_map(move |terms| {
        let mut f = HoloFun::zero(n);
        for (m, re, im) in terms {
            f.push_poly(c(re, im), MultiIndex::new(m));
        }
        f
    })
}

fn dim() -> impl Strategy<Value = usize> {
    1usize..=3
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mobius_is_an_involution((a, z) in dim().prop_flat_map(|n| (point(n, 0.99), point(n, 0.99)))) {
        let w = mobius(&a, &z).unwrap();
        prop_assert!(mobius(&a, &w).unwrap().max_abs_diff(&z) <= 1e-10);
    }

    #[test]
    fn mobius_defect_identity((a, z) in dim().prop_flat_map(|n| (point(n, 0.99), point(n, 0.99)))) {
        let w = mobius(&a, &z).unwrap();
        let lhs = (1.0 - w.norm_sq()) * (c(1.0, 0.0) - z.dot(&a)).norm_sqr();
        let rhs = (1.0 - a.norm_sq()) * (1.0 - z.norm_sq());
        prop_assert!((lhs - rhs).abs() <= 1e-10);
    }

    #[test]
    fn bergman_distance_triangle_inequality((x, y, z) in dim().prop_flat_map(|n| (point(n, 0.95), point(n, 0.95), point(n, 0.95)))) {
        let d = |p: &CVec, q: &CVec| bergman_dist(p, q).unwrap();
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-10);
    }

    #[test]
    fn poisson_kernel_is_positive((a, zeta) in dim().prop_flat_map(|n| (point(n, 0.95), point(n, 1.0)))) {
        prop_assume!(zeta.norm() > 1e-6);
        let zeta = zeta.direction();
        prop_assert!(poisson_kernel(&a, &zeta).unwrap() > 0.0);
    }

    #[test]
    fn derivatives_are_linear((f, g, z) in dim().prop_flat_map(|n| (poly(n), poly(n), point(n, 0.95)))) {
        let h = f.add(&g);
        prop_assert!((h.eval(&z) - f.eval(&z) - g.eval(&z)).norm() <= 1e-12);
        prop_assert!((h.radial(&z) - f.radial(&z) - g.radial(&z)).norm() <= 1e-12);
        prop_assert!(h.grad(&z).max_abs_diff(&CVec::new(f.grad(&z).coords().iter().zip(g.grad(&z).coords()).map(|(a, b)| a + b))) <= 1e-12);
    }

    #[test]
    fn radial_derivative_is_gradient_against_z((f, z) in dim().prop_flat_map(|n| (poly(n), point(n, 0.95)))) {
        // Rf = Σ z_k ∂_k f, and CVec::dot conjugates its argument.
        let euler = f.grad(&z).dot(&z.conj());
        prop_assert!((f.radial(&z) - euler).norm() <= 1e-12);
    }

    #[test]
    fn fractional_inverse_undoes_the_derivative((f, z) in dim().prop_flat_map(|n| (poly(n), point(n, 0.9))), t in 0.1f64..2.0) {
        let alpha = 0.5;
        let back = frac_inv(&frac_deriv(&f, alpha, t).unwrap(), alpha, t).unwrap();
        prop_assert!((back.eval(&z) - f.eval(&z)).norm() <= 1e-12 * (1.0 + f.eval(&z).norm()));
    }

    #[test]
    fn fractional_composition_law((f, z) in dim().prop_flat_map(|n| (poly(n), point(n, 0.9))), t1 in 0.1f64..1.5, t2 in 0.1f64..1.5) {
        let alpha = 0.3;
        let two = frac_deriv(&frac_deriv(&f, alpha + t1, t2).unwrap(), alpha, t1).unwrap();
        let one = frac_deriv(&f, alpha, t1 + t2).unwrap();
        let (a, b) = (two.eval(&z), one.eval(&z));
        prop_assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
    }

    #[test]
    fn sphere_integral_is_rotation_invariant(phases in prop::collection::vec(0.0f64..std::f64::consts::TAU, 2), seed in 0u64..1000) {
        let rule = sphere_rule(2, 3, seed).unwrap();
        let u = |z: &CVec| CVec::new(z.coords().iter().zip(&phases).map(|(x, &p)| x * Complex64::from_polar(1.0, p)));
        let g = |z: &CVec| c(z[0].norm_sqr().powi(2), 0.0);
        let plain = integrate(g, &rule, Weight::None).unwrap();
        let rotated = integrate(|z| g(&u(z)), &rule, Weight::None).unwrap();
        prop_assert!((plain.value - rotated.value).norm() <= 3.0 * plain.error.max(rotated.error) + 1e-15);
    }

    #[test]
    fn sphere_rules_are_deterministic(n in 1usize..=3, seed in any::<u64>()) {
        prop_assert_eq!(sphere_rule(n, 2, seed).unwrap(), sphere_rule(n, 2, seed).unwrap());
    }

    #[test]
    fn synthesis_is_linear(
        (centers, z) in (1usize..=2).prop_flat_map(|n| (prop::collection::vec(point(n, 0.9), 1..5), point(n, 0.9))),
        coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5),
        other in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5),
    ) {
        let k = centers.len();
        let a: Vec<Complex64> = coeffs[..k].iter().map(|&(x, y)| c(x, y)).collect();
        let b: Vec<Complex64> = other[..k].iter().map(|&(x, y)| c(x, y)).collect();
        let sum: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let bexp = z.dim() as f64 + 1.0;
        let eval = |cs: &[Complex64]| synthesize(cs, &centers, bexp).unwrap().eval(&z);
        prop_assert!((eval(&sum) - eval(&a) - eval(&b)).norm() <= 1e-12 * (1.0 + eval(&sum).norm()));
    }

    #[test]
    fn riemann_stieltjes_symmetry((f, g, probes) in (1usize..=2).prop_flat_map(|n| (poly(n), poly(n), prop::collection::vec(point(n, 0.9), 4)))) {
        prop_assert!(symmetry_residual(&g, &f, &probes).unwrap() <= 1e-12);
    }
}

fn discrete(n: usize) -> impl Strategy<Value = Vec<(f64, CVec)>> {
    prop::collection::vec((0.05f64..1.0, point(n, 0.95)), 1..8)
}

fn small_grid(n: usize) -> SupGrid {
    SupGrid::build(n, &GridSpec { centers: 16, radii: 6, r_min: 0.05, r_max: 2.0, random: 4 }, &[], 7).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn carleson_constant_scales_with_the_root(atoms in discrete(2), k in 0.01f64..100.0, p in 0.5f64..1.5) {
        let grid = small_grid(2);
        let cfg = AdaptConfig::for_level(1);
        let mu = MeasureSpec::discrete(2, atoms).unwrap();
        let base = cm_constant(&mu, p, &grid, &cfg).unwrap().value;
        let scaled = cm_constant(&mu.scaled(k), p, &grid, &cfg).unwrap().value;
        prop_assert!((scaled - k.sqrt() * base).abs() <= 1e-12 * scaled.max(1.0));
    }

    #[test]
    fn carleson_constant_is_monotone_in_the_measure(atoms in discrete(1), extra in discrete(1), p in 0.5f64..1.5) {
        let grid = small_grid(1);
        let cfg = AdaptConfig::for_level(1);
        let mu = MeasureSpec::discrete(1, atoms.clone()).unwrap();
        let more = MeasureSpec::discrete(1, atoms.into_iter().chain(extra).collect()).unwrap();
        prop_assert!(cm_constant(&more, p, &grid, &cfg).unwrap().value >= cm_constant(&mu, p, &grid, &cfg).unwrap().value);
    }

    #[test]
    fn enlarging_the_grid_never_lowers_a_supremum(atoms in discrete(1), p in 0.5f64..1.5) {
        let cfg = AdaptConfig::for_level(1);
        let mu = MeasureSpec::discrete(1, atoms).unwrap();
        let spec = GridSpec { centers: 16, radii: 6, r_min: 0.05, r_max: 2.0, random: 0 };
        let coarse = SupGrid::build(1, &spec, &[], 1).unwrap();
        let fine = SupGrid::build(1, &spec.doubled(), &[], 1).unwrap();
        prop_assert!(cm_constant(&mu, p, &fine, &cfg).unwrap().value >= cm_constant(&mu, p, &coarse, &cfg).unwrap().value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn norms_are_absolutely_homogeneous(f in poly(1), re in -3.0f64..3.0, im in -3.0f64..3.0, s in -0.25f64..0.5) {
        let k = c(re, im);
        prop_assume!(k.norm() > 1e-3);
        let grid = small_grid(1);
        let cfg = AdaptConfig::for_level(1);
        let g = f.scale(k);
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-10 * (1.0 + y.abs());
        let (o1, o2) = (OscTable::compute(&f, &grid, &cfg).unwrap().norm(s), OscTable::compute(&g, &grid, &cfg).unwrap().norm(s));
        prop_assert!(close(o2.seminorm, k.norm() * o1.seminorm));
        prop_assert!(close(o2.value, k.norm() * o1.value));
        let (m1, m2) = (PointTable::mobius(&f, &grid, &cfg).unwrap().norm(s), PointTable::mobius(&g, &grid, &cfg).unwrap().norm(s));
        prop_assert!(close(m2.seminorm, k.norm() * m1.seminorm));
        prop_assert!(close(m2.value, k.norm() * m1.value));
    }

    #[test]
    fn constants_have_zero_seminorm(re in -3.0f64..3.0, im in -3.0f64..3.0, n in 1usize..=2) {
        let f = HoloFun::constant(n, c(re, im));
        let grid = small_grid(n);
        let cfg = AdaptConfig::for_level(1);
        prop_assert!(OscTable::compute(&f, &grid, &cfg).unwrap().norm(0.0).seminorm <= 1e-12);
        prop_assert!(PointTable::mobius(&f, &grid, &cfg).unwrap().norm(0.0).seminorm <= 1e-12);
    }
}

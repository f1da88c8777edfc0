//! The fifteen acceptance criteria. Each takes the configuration, draws from
//! its own random stream and returns every quantity it measured.
//!
//! Stability checks rerun a computation at `level + 1` on a doubled grid and
//! compare; a bracket or constant is stable when it moves by less than 10%.

use super::{rel_drift, stream_rng, stream_seed, Bracket, Check, CriterionOutcome, ExperimentConfig};
use crate::carleson::{
    cm_constant, cm_dual_constant, forelli_rudin_check, gradient_measure, tab_preservation, tent_norm, FrCase,
    GradientKind, MeasureSpec, RealFun, TabParams,
};
use crate::geom::{mobius_unchecked, CVec};
use crate::holofun::{frac_deriv, frac_inv, homogeneous_expand, multi_indices, HoloFun, DEFAULT_TERM_LIMIT};
use crate::lattice::{canonical_atom, coeff_cm, generate_lattice, synthesize, CoeffFlavor};
use crate::norms::{GridSpec, OscTable, PointTable, SupGrid};
use crate::operators::{gleason_decompose, gleason_residual, multiplier_check, rs_radial_identity, symmetry_residual};
use crate::quad::adapted::AdaptConfig;
use crate::quad::{integrate, qmc, sphere_rule, Weight};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Drift allowed for a bracket endpoint or constant under refinement.
pub const STABILITY_TOL: f64 = 0.10;

/// Runs criterion `id` (1..=15).
pub fn run(id: u32, cfg: &ExperimentConfig) -> CriterionOutcome {
    match id {
        1 => mobius_identities(cfg),
        2 => quadrature_oracles(cfg),
        3 => tangential_identity(cfg),
        4 => fractional_kernel(cfg),
        5 => gleason_reconstruction(cfg),
        6 => riemann_stieltjes_identities(cfg),
        7 => carleson_constants(cfg),
        8 => norm_equivalence(cfg),
        9 => gradient_characterizations(cfg),
        10 => canonical_atoms(cfg),
        11 => lattice_synthesis(cfg),
        12 => tent_embedding(cfg),
        13 => tab_preservation_check(cfg),
        14 => two_kernel_bound(cfg),
        15 => super::report::determinism(cfg),
        _ => {
            let mut o = CriterionOutcome::new(id, "unknown");
            o.errors.push(format!("no criterion {id}"));
            o
        }
    }
}

pub fn title(id: u32) -> &'static str {
    match id {
        1 => "Mobius identities",
        2 => "quadrature oracles",
        3 => "tangential identity",
        4 => "fractional kernel identity",
        5 => "Gleason reconstruction",
        6 => "Riemann-Stieltjes identities",
        7 => "Carleson constants",
        8 => "norm equivalence brackets",
        9 => "gradient characterizations",
        10 => "canonical atom",
        11 => "lattice and synthesis",
        12 => "tent embedding",
        13 => "T_ab preservation",
        14 => "two-kernel bound",
        15 => "determinism",
        _ => "unknown",
    }
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn rng_for(cfg: &ExperimentConfig, id: u32) -> ChaCha8Rng {
    let suite = super::config::criterion_suite(id).unwrap_or("none");
    stream_rng(cfg.seed, &format!("{suite}/{id}"))
}

fn random_direction(n: usize, rng: &mut ChaCha8Rng) -> CVec {
    let u: Vec<f64> = (0..qmc::sphere_cube_dim(n)).map(|_| rng.random::<f64>()).collect();
    qmc::cube_to_sphere(n, &u)
}

/// Uniform for ν on the ball of radius `rmax`.
fn random_point(n: usize, rmax: f64, rng: &mut ChaCha8Rng) -> CVec {
    let dir = random_direction(n, rng);
    dir.scale(rmax * rng.random::<f64>().powf(0.5 / n as f64))
}

fn random_unit_disk(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(rng.random::<f64>().sqrt(), std::f64::consts::TAU * rng.random::<f64>())
}

/// Every monomial of degree `1..=d` (and the constant) with coefficients in
/// the unit disk, for a random `d ≤ max_degree`.
pub fn random_poly(n: usize, max_degree: u32, rng: &mut ChaCha8Rng) -> HoloFun {
    let d = rng.random_range(1..=max_degree);
    let mut f = HoloFun::zero(n);
    for k in 0..=d {
        for m in multi_indices(n, k) {
            f.push_poly(random_unit_disk(rng), m);
        }
    }
    f
}

fn random_discrete(n: usize, atoms: usize, rmax: f64, rng: &mut ChaCha8Rng) -> crate::Result<MeasureSpec> {
    let pts = (0..atoms).map(|_| (0.05 + 0.95 * rng.random::<f64>(), random_point(n, rmax, rng))).collect();
    MeasureSpec::discrete(n, pts)
}

fn adapt(level: u32) -> AdaptConfig {
    AdaptConfig::for_level(level)
}

fn scaled_spec(cfg: &ExperimentConfig, mut spec: GridSpec) -> GridSpec {
    for _ in 0..cfg.grid.doublings {
        spec = spec.doubled();
    }
    spec
}

/// Base and refined grids sharing a seed, so the refined grid contains the base one.
fn grid_pair(cfg: &ExperimentConfig, n: usize, spec: GridSpec, extra: &[CVec], label: &str) -> crate::Result<(SupGrid, SupGrid)> {
    let spec = scaled_spec(cfg, spec);
    let seed = stream_seed(cfg.seed, label);
    Ok((SupGrid::build(n, &spec, extra, seed)?, SupGrid::build(n, &spec.doubled(), extra, seed)?))
}

fn atom_directions(fs: &[HoloFun]) -> Vec<CVec> {
    fs.iter().flat_map(|f| f.features()).map(|f| f.dir).collect()
}

// ---------------------------------------------------------------- 1

fn mobius_identities(cfg: &ExperimentConfig) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(1, title(1));
    let mut rng = rng_for(cfg, 1);
    const SAMPLES: usize = 1000;
    for n in cfg.dims(&[1, 2, 3]) {
        let (mut inv, mut origin, mut defect) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..SAMPLES {
            let a = random_point(n, 0.99, &mut rng);
            let z = random_point(n, 0.99, &mut rng);
            let w = mobius_unchecked(&a, &z);
            inv = inv.max(mobius_unchecked(&a, &w).max_abs_diff(&z));
            origin = origin.max(mobius_unchecked(&a, &CVec::zeros(n)).max_abs_diff(&a));
            let rhs = (1.0 - a.norm_sq()) * (1.0 - z.norm_sq()) / (c(1.0) - z.dot(&a)).norm_sqr();
            defect = defect.max((1.0 - w.norm_sq() - rhs).abs());
        }
        out.push(Check::at_most("involution", n, None, inv, SAMPLES, 1e-10));
        out.push(Check::at_most("origin_to_a", n, None, origin, SAMPLES, 1e-10));
        out.push(Check::at_most("defect_identity", n, None, defect, SAMPLES, 1e-10));
    }
    out
}

// ---------------------------------------------------------------- 2

fn ln_beta(a: f64, b: f64) -> f64 {
    libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)
}

/// `∫ |ζ^m|² dσ` by peeling one coordinate at a time: `|ζ_1|²` is
/// Beta(1, n−1) distributed and the rest rescales to `S_{n−1}`.
pub fn sphere_moment_oracle(m: &[u32]) -> f64 {
    let n = m.len();
    let mut log = 0.0;
    let mut tail: f64 = m.iter().map(|&x| f64::from(x)).sum();
    for (j, &mj) in m.iter().enumerate().take(n - 1) {
        let k = (n - 1 - j) as f64;
        tail -= f64::from(mj);
        log += ln_beta(f64::from(mj) + 1.0, k + tail) - ln_beta(1.0, k);
    }
    log.exp()
}

fn quadrature_oracles(cfg: &ExperimentConfig) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(2, title(2));
    let seed = stream_seed(cfg.seed, "quadrature/2");
    for n in cfg.dims(&[1, 2]) {
        let Some(rule) = out.attempt("sphere rule", sphere_rule(n, cfg.level, seed)) else { continue };
        if n == 1 {
            let count = rule.nodes.len();
            let mut worst = 0.0f64;
            for k in 0..count {
                let v: Complex64 = rule.nodes.iter().zip(&rule.weights).map(|(z, w)| z[0].powu(k as u32) * w).sum();
                let exact = if k == 0 { 1.0 } else { 0.0 };
                worst = worst.max((v - exact).norm());
            }
            out.push(Check::at_most("circle_power_integrals", 1, None, worst, count, 1e-13));
            continue;
        }
        for deg in 1..=4u32 {
            for m in multi_indices(n, deg) {
                let Some(est) = out.attempt("integrate", integrate(|z| c(m.monomial(z).norm_sqr()), &rule, Weight::None)) else {
                    continue;
                };
                let err = (est.value.re - sphere_moment_oracle(m.entries())).abs();
                out.push(Check::at_most(format!("sphere_moment{:?}", m.entries()), n, None, err, rule.nodes.len(), 3.0 * est.error));
            }
        }
    }
    out
}

// ---------------------------------------------------------------- 3

/// `|z|² |∇̃f(z)|²` from the derivative of `φ_z` at the origin,
/// `φ_z'(0) = −((1−|z|²)P + (1−|z|²)^{1/2}Q)` with `P` the projection on `z`.
fn invariant_gradient_by_chain_rule(grad: &[Complex64], z: &CVec) -> f64 {
    let n = z.dim();
    let zz = z.norm_sq();
    let d = 1.0 - zz;
    let mut total = 0.0;
    for j in 0..n {
        let mut w = Complex64::new(0.0, 0.0);
        for (k, gk) in grad.iter().enumerate() {
            let p = z[k] * z[j].conj() / zz;
            let q = if j == k { c(1.0) - p } else { -p };
            w += gk * (p * d + q * d.sqrt());
        }
        total += w.norm_sqr();
    }
    zz * total
}

fn tangential_identity(cfg: &ExperimentConfig) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(3, title(3));
    let mut rng = rng_for(cfg, 3);
    const SAMPLES: usize = 100;
    for n in cfg.dims(&[2, 3]) {
        if n < 2 {
            out.errors.push("tangential derivatives need n >= 2".into());
            continue;
        }
        let (mut ident, mut library) = (0.0f64, 0.0f64);
        for _ in 0..SAMPLES {
            let mut f = random_poly(n, 4, &mut rng);
            let a = random_point(n, 0.9, &mut rng);
            if f.push_atom(random_unit_disk(&mut rng), a, n as f64).is_err() {
                continue;
            }
            let z = random_point(n, 0.95, &mut rng);
            let jet = f.jet(&z);
            let lhs = invariant_gradient_by_chain_rule(&jet.grad, &z);
            let d = 1.0 - z.norm_sq();
            let rhs = d * (d * jet.radial(&z).norm_sqr() + jet.tangential_sq_sum(&z));
            let scale = lhs.abs().max(1.0);
            ident = ident.max((lhs - rhs).abs() / scale);
            library = library.max((z.norm_sq() * jet.inv_grad_sq(&z) - lhs).abs() / scale);
        }
        out.push(Check::at_most("tangential_identity_rel", n, None, ident, SAMPLES, 1e-10));
        out.push(Check::at_most("invariant_gradient_rel", n, None, library, SAMPLES, 1e-10));
    }
    out
}

// ---------------------------------------------------------------- 4

/// `Σ_k (b)_k/k! m_k u^k` with `m_k = Γ(N)Γ(N+k+t)/(Γ(N+t)Γ(N+k))`, `N = n+1+α`:
/// the kernel after the multipliers act on its homogeneous parts.
fn kernel_series(n: usize, alpha: f64, t: f64, u: Complex64) -> Complex64 {
    let nn = n as f64 + 1.0 + alpha;
    let b = nn;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut pow = c(1.0);
    let mut poch = 1.0;
    for k in 0..2000 {
        let kf = k as f64;
        let m = (libm::lgamma(nn) + libm::lgamma(nn + kf + t) - libm::lgamma(nn + t) - libm::lgamma(nn + kf)).exp();
        let term = pow * (poch * m);
        sum += term;
        if k > 10 && term.norm() < 1e-18 * sum.norm() {
            break;
        }
        poch *= (b + kf) / (kf + 1.0);
        pow *= u;
    }
    sum
}

fn fractional_kernel(cfg: &ExperimentConfig) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(4, title(4));
    let mut rng = rng_for(cfg, 4);
    const POINTS: usize = 50;
    let cases: Vec<(usize, f64, f64)> =
        [(1, 0.0, 0.5), (2, 0.0, 1.0), (2, 0.5, 0.25)].into_iter().filter(|(n, _, _)| cfg.params.n.is_none_or(|m| m == *n)).collect();
    let cases = if cases.is_empty() { vec![(cfg.params.n.unwrap_or(1), 0.0, 0.5)] } else { cases };
    for (n, alpha, t) in cases {
        let s_tag = Some(t);
        let omega = CVec::basis(n, 0).scale(0.4);
        let b = n as f64 + 1.0 + alpha;
        let Some(kernel) = out.attempt("kernel", HoloFun::atom(c(1.0), omega.clone(), b)) else { continue };
        let Some(target) = out.attempt("target", HoloFun::atom(c(1.0), omega.clone(), b + t)) else { continue };
        let Some(direct) = out.attempt("frac_deriv", frac_deriv(&kernel, alpha, t)) else { continue };
        let Some(exp) = out.attempt("expansion", homogeneous_expand(&kernel, 60, DEFAULT_TERM_LIMIT)) else { continue };
        let Some(series) = out.attempt("frac_deriv of expansion", frac_deriv(&exp.fun, alpha, t)) else { continue };
        let (mut e_direct, mut e_series, mut e_scalar) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..POINTS {
            let z = random_point(n, 0.95, &mut rng);
            let want = target.eval(&z);
            let rel = |v: Complex64| (v - want).norm() / want.norm();
            e_direct = e_direct.max(rel(direct.eval(&z)));
            e_series = e_series.max(rel(series.eval(&z)));
            e_scalar = e_scalar.max(rel(kernel_series(n, alpha, t, z.dot(&omega))));
        }
        let tag = |s: &str| format!("{s}(alpha={alpha},t={t})");
        out.push(Check::at_most(tag("kernel_atom_path"), n, s_tag, e_direct, POINTS, 1e-8));
        out.push(Check::at_most(tag("kernel_expansion_path"), n, s_tag, e_series, POINTS, 1e-8));
        out.push(Check::at_most(tag("kernel_scalar_series"), n, s_tag, e_scalar, POINTS, 1e-8));

        // Composition and inversion on random polynomials.
        let (mut e_inv, mut e_comp) = (0.0f64, 0.0f64);
        let t2 = 0.3;
        for _ in 0..10 {
            let p = random_poly(n, 5, &mut rng);
            let (Some(d), Some(d12)) = (out.attempt("R", frac_deriv(&p, alpha, t)), out.attempt("R", frac_deriv(&p, alpha, t + t2))) else {
                continue;
            };
            let (Some(back), Some(d2)) = (out.attempt("R inverse", frac_inv(&d, alpha, t)), out.attempt("R", frac_deriv(&d, alpha + t, t2))) else {
                continue;
            };
            for _ in 0..5 {
                let z = random_point(n, 0.95, &mut rng);
                let pv = p.eval(&z);
                e_inv = e_inv.max((back.eval(&z) - pv).norm() / pv.norm().max(1.0));
                let want = d12.eval(&z);
                e_comp = e_comp.max((d2.eval(&z) - want).norm() / want.norm().max(1.0));
            }
        }
        out.push(Check::at_most(tag("inversion_law"), n, s_tag, e_inv, POINTS, 1e-12));
        out.push(Check::at_most(tag("composition_law"), n, s_tag, e_comp, POINTS, 1e-12));
    }
    out
}

// ---------------------------------------------------------------- 5

/// `f` minus its Taylor part of degree `< m`.
fn strip_low_degrees(f: &HoloFun, m: u32) -> HoloFun {
    let n = f.dim();
    let mut g = f.clone();
    for k in 0..m {
        for idx in multi_indices(n, k) {
            let c0 = f.taylor_coeff(&idx);
            g.push_poly(-c0, idx);
        }
    }
    g
}

fn gleason_reconstruction(cfg: &ExperimentConfig) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(5, title(5));
    let mut rng = rng_for(cfg, 5);
    for n in cfg.dims(&[1, 2, 3]) {
        let probes: Vec<CVec> = (0..20).map(|_| random_point(n, 0.95, &mut rng)).collect();
        for m in 1..=3u32 {
            let (mut worst, mut count, mut wrongly_accepted) = (0.0f64, 0usize, 0usize);
            for deg in 0..=5u32 {
                for beta in multi_indices(n, deg) {
                    let f = HoloFun::monomial(c(1.0), beta);
                    match gleason_decompose(&f, m) {
                        Ok(parts) if deg >= m => {
                            worst = worst.max(gleason_residual(&f, &parts, &probes));
                            count += 1;
                        }
                        Ok(_) => wrongly_accepted += 1,
                        Err(e) if deg >= m => out.errors.push(format!("monomial of degree {deg}, m = {m}: {e}")),
                        Err(_) => {}
                    }
                }
            }
            out.push(Check::at_most(format!("monomials(m={m})"), n, None, worst, count * probes.len(), 1e-12));
            out.push(Check::at_most(format!("vanishing_enforced(m={m})"), n, None, wrongly_accepted as f64, count, 0.0));
        }
        let probes: Vec<CVec> = (0..100).map(|_| random_point(n, 0.9, &mut rng)).collect();
        let dir = random_direction(n, &mut rng);
        let a = dir.scale(0.5 + 0.4 * rng.random::<f64>());
        let Some(fa) = out.attempt("atom", canonical_atom(&a, 0.0, n)) else { continue };
        for m in 1..=2u32 {
            let g = strip_low_degrees(&fa, m);
            let Some(parts) = out.attempt("decompose atom", gleason_decompose(&g, m)) else { continue };
            let r = gleason_residual(&g, &parts, &probes);
            out.push(Check::at_most(format!("atom(m={m},|a|={:.3})", a.norm()), n, None, r, probes.len(), 1e-8));
        }
    }
    out
}

// ---------------------------------------------------------------- 6

fn riemann_stieltjes_identities(cfg: &ExperimentConfig) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(6, title(6));
    let mut rng = rng_for(cfg, 6);
    const PAIRS: usize = 20;
    for n in cfg.dims(&[2]) {
        let (mut sym, mut mult, mut rad) = (0.0f64, 0.0f64, 0.0f64);
        let mut probes_used = 0;
        for _ in 0..PAIRS {
            let g = random_poly(n, 4, &mut rng);
            let f = random_poly(n, 4, &mut rng);
            let probes: Vec<CVec> = (0..10).map(|_| random_point(n, 0.95, &mut rng)).collect();
            probes_used += probes.len();
            if let Some(v) = out.attempt("symmetry", symmetry_residual(&g, &f, &probes)) {
                sym = sym.max(v);
            }
            if let Some(v) = out.attempt("multiplier", multiplier_check(&g, &f, &probes)) {
                mult = mult.max(v);
            }
            if let Some(v) = out.attempt("radial", rs_radial_identity(&g, &f, &probes)) {
                rad = rad.max(v);
            }
        }
        out.push(Check::at_most("T_g_f_equals_S_f_g", n, None, sym, probes_used, 1e-12));
        out.push(Check::at_most("multiplier_identity", n, None, mult, probes_used, 1e-12));
        out.push(Check::at_most("radial_of_T_g_f", n, None, rad, probes_used, 1e-12));
    }
    out
}

// ---------------------------------------------------------------- 7

/// `sup (μ(Q_r(ζ)) / r^{np})^{1/2}` for `μ = δ_a` over a fine grid of
/// centers and radii, by direct membership tests.
fn brute_point_mass_cm(a: &CVec, p: f64, centers: usize, radii: usize) -> f64 {
    let n = a.dim();
    let rs = crate::norms::log_radii(radii, 1e-3, 2.0);
    let mut best = 0.0f64;
    for zeta in crate::norms::boundary_points(n, centers) {
        let d = (c(1.0) - a.dot(&zeta)).norm();
        if let Some(r) = rs.iter().find(|&&r| d < r) {
            best = best.max(r.powf(-(n as f64) * p));
        }
    }
    best.sqrt()
}

fn carleson_constants(cfg: &ExperimentConfig) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(7, title(7));
    let mut rng = rng_for(cfg, 7);
    let ad = adapt(cfg.level);

    // Single point mass at distance 0.1 from the sphere, 256 centers × 24 radii.
    {
        let n = 1;
        let a = CVec::basis(n, 0).scale(0.9);
        let spec = GridSpec { centers: 256, radii: 24, r_min: 0.02, r_max: 1.0, random: 0 };
        let grid = SupGrid::build(n, &spec, &[], 0);
        let mu = MeasureSpec::point_mass(1.0, a.clone());
        if let (Some(grid), Some(mu)) = (out.attempt("grid", grid), out.attempt("point mass", mu)) {
            if let Some(rep) = out.attempt("cm", cm_constant(&mu, 1.0, &grid, &ad)) {
                let oracle = brute_point_mass_cm(&a, 1.0, 4096, 4000);
                out.push(Check::info("point_mass_oracle", n, None, oracle, 4096 * 4000));
                out.push(Check::at_most("point_mass_rel_err", n, None, rel_drift(oracle, rep.value), 256 * 24, 0.05));
            }
        }
    }

    // Dual form over random discrete measures, at the same 256 × 24 density.
    const MEASURES: usize = 20;
    const DUAL_GRID: GridSpec = GridSpec { centers: 256, radii: 24, r_min: 0.02, r_max: 1.0, random: 64 };
    for n in cfg.dims(&[1, 2]) {
        let mut base = Vec::new();
        let mut fine = Vec::new();
        for k in 0..MEASURES {
            let Some(mu) = out.attempt("measure", random_discrete(n, 10, 0.95, &mut rng)) else { continue };
            let MeasureSpec::Discrete { atoms, .. } = &mu else { continue };
            let dirs: Vec<CVec> = atoms.iter().filter(|(_, a)| a.norm() > 0.0).map(|(_, a)| a.direction()).collect();
            let Some((g0, g1)) = out.attempt("grid", grid_pair(cfg, n, DUAL_GRID, &dirs, &format!("carleson/7/{n}/{k}"))) else {
                continue;
            };
            for (g, sink) in [(&g0, &mut base), (&g1, &mut fine)] {
                let cm = out.attempt("cm", cm_constant(&mu, 1.0, g, &ad));
                let dual = out.attempt("cm_dual", cm_dual_constant(&mu, 1.0, 1.0, &g.a_samples, &ad));
                if let (Some(cm), Some((dual, _))) = (cm, dual) {
                    sink.push(dual / cm.value);
                }
            }
        }
        let (Some(b0), Some(b1)) = (Bracket::of(base), Bracket::of(fine)) else { continue };
        out.push(Check::info("dual_ratio_lo", n, None, b0.lo, MEASURES));
        out.push(Check::info("dual_ratio_hi", n, None, b0.hi, MEASURES));
        out.push(Check::info("dual_ratio_lo_doubled", n, None, b1.lo, MEASURES));
        out.push(Check::info("dual_ratio_hi_doubled", n, None, b1.hi, MEASURES));
        out.push(Check::at_most("dual_ratio_spread_C", n, None, b0.spread().max(b1.spread()), MEASURES, 20.0));
        out.push(Check::at_most("dual_ratio_drift", n, None, b0.drift(&b1), MEASURES, STABILITY_TOL));
    }
    out
}

// ---------------------------------------------------------------- 8

/// The test family: canonical atoms at the given radii in random directions,
/// then random polynomials of degree ≤ 5.
fn family(n: usize, s: f64, radii: &[f64], polys: usize, rng: &mut ChaCha8Rng) -> crate::Result<Vec<HoloFun>> {
    let mut out = Vec::new();
    for &r in radii {
        let a = random_direction(n, rng).scale(r);
        out.push(canonical_atom(&a, s, n)?);
    }
    for _ in 0..polys {
        out.push(random_poly(n, 5, rng));
    }
    Ok(out)
}

const FAMILY_RADII: [f64; 4] = [0.5, 0.7, 0.9, 0.99];

/// Grids for the supremum norms: fewer centers in `n = 2`, where each Green
/// sample point costs a full ball integral.
fn norm_grid_spec(n: usize) -> GridSpec {
    if n == 1 {
        GridSpec { centers: 32, radii: 10, r_min: 0.005, r_max: 1.0, random: 16 }
    } else {
        GridSpec { centers: 4, radii: 5, r_min: 0.01, r_max: 1.0, random: 4 }
    }
}

struct NormTables {
    osc: OscTable,
    mobius: PointTable,
    green: PointTable,
}

fn norm_tables(f: &HoloFun, grid: &SupGrid, ad: &AdaptConfig) -> crate::Result<NormTables> {
    Ok(NormTables { osc: OscTable::compute(f, grid, ad)?, mobius: PointTable::mobius(f, grid, ad)?, green: PointTable::green(f, grid, ad)? })
}

const PAIRS: [(&str, usize, usize); 3] = [("mobius/osc", 1, 0), ("green/osc", 2, 0), ("green/mobius", 2, 1)];

fn norm_equivalence(cfg: &ExperimentConfig) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(8, title(8));
    let mut rng = rng_for(cfg, 8);
    let s_list = cfg.s_values(&[-0.25, 0.0, 0.25]);
    for n in cfg.dims(&[1, 2]) {
        // Atoms built at s = 0; other s rescale the coefficient by (1−|a|²)^{−s}.
        let Some(fam) = out.attempt("family", family(n, 0.0, &FAMILY_RADII, 20, &mut rng)) else { continue };
        let dirs = atom_directions(&fam);
        let Some((g0, g1)) = out.attempt("grid", grid_pair(cfg, n, norm_grid_spec(n), &dirs, &format!("equivalence/8/{n}"))) else {
            continue;
        };
        let mut tables = Vec::new();
        for (g, level) in [(&g0, cfg.level), (&g1, cfg.level + 1)] {
            let ad = adapt(level);
            let t: Vec<_> = fam.iter().filter_map(|f| out.attempt("norm tables", norm_tables(f, g, &ad))).collect();
            tables.push(t);
        }
        if tables[0].len() != fam.len() || tables[1].len() != fam.len() {
            continue;
        }
        for &s in &s_list {
            // [refinement][pair] brackets of seminorm and total ratios.
            let mut semi = [[None; 3]; 2];
            let mut total = [[None; 3]; 2];
            for (lvl, ts) in tables.iter().enumerate() {
                let mut rs = [vec![], vec![], vec![]];
                let mut rt = [vec![], vec![], vec![]];
                for (f, t) in fam.iter().zip(ts) {
                    let scale = f.atom_terms().first().map(|a| (1.0 - a.center.norm_sq()).powf(-s)).unwrap_or(1.0);
                    let reps = [t.osc.scaled(scale).norm(s), t.mobius.scaled(scale).norm(s), t.green.scaled(scale).norm(s)];
                    for (k, &(_, i, j)) in PAIRS.iter().enumerate() {
                        rs[k].push(reps[i].seminorm / reps[j].seminorm);
                        rt[k].push(reps[i].value / reps[j].value);
                    }
                }
                for k in 0..3 {
                    semi[lvl][k] = Bracket::of(rs[k].iter().copied());
                    total[lvl][k] = Bracket::of(rt[k].iter().copied());
                }
            }
            for (k, &(name, _, _)) in PAIRS.iter().enumerate() {
                let (Some(b0), Some(b1)) = (semi[0][k], semi[1][k]) else { continue };
                let probes = fam.len();
                out.push(Check::info(format!("seminorm[{name}]_lo"), n, Some(s), b0.lo, probes));
                out.push(Check::info(format!("seminorm[{name}]_hi"), n, Some(s), b0.hi, probes));
                out.push(Check::info(format!("seminorm[{name}]_lo_refined"), n, Some(s), b1.lo, probes));
                out.push(Check::info(format!("seminorm[{name}]_hi_refined"), n, Some(s), b1.hi, probes));
                out.push(Check::at_least(format!("seminorm[{name}]_lo_positive"), n, Some(s), b0.lo.min(b1.lo), probes, f64::MIN_POSITIVE));
                out.push(Check::at_most(format!("seminorm[{name}]_drift"), n, Some(s), b0.drift(&b1), probes, STABILITY_TOL));
                if let (Some(t0), Some(t1)) = (total[0][k], total[1][k]) {
                    out.push(Check::info(format!("total[{name}]_lo"), n, Some(s), t0.lo, probes));
                    out.push(Check::info(format!("total[{name}]_hi"), n, Some(s), t0.hi, probes));
                    out.push(Check::info(format!("total[{name}]_drift"), n, Some(s), t0.drift(&t1), probes));
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------- 9

fn gradient_grid_spec(n: usize) -> GridSpec {
    if n == 1 {
        GridSpec { centers: 32, radii: 8, r_min: 0.01, r_max: 1.0, random: 0 }
    } else {
        GridSpec { centers: 16, radii: 8, r_min: 0.01, r_max: 1.0, random: 0 }
    }
}

fn gradient_characterizations(cfg: &ExperimentConfig) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(9, title(9));
    let mut rng = rng_for(cfg, 9);
    let kinds = [GradientKind::InvGrad, GradientKind::Grad, GradientKind::Radial];
    let pairs = [("grad/inv_grad", 1, 0), ("radial/inv_grad", 2, 0), ("radial/grad", 2, 1)];
    for n in cfg.dims(&[2]) {
        for s in cfg.s_values(&[0.25]) {
            let p = 1.0 - 2.0 * s / n as f64;
            let Some(fam) = out.attempt("family", family(n, s, &FAMILY_RADII, 20, &mut rng)) else { continue };
            let dirs = atom_directions(&fam);
            let Some((g0, g1)) = out.attempt("grid", grid_pair(cfg, n, gradient_grid_spec(n), &dirs, &format!("gradients/9/{n}"))) else {
                continue;
            };
            let mut brackets = Vec::new();
            let mut tangential_worst = 0.0f64;
            for (g, level) in [(&g0, cfg.level), (&g1, cfg.level + 1)] {
                let ad = adapt(level);
                let mut ratios = [vec![], vec![], vec![]];
                for f in &fam {
                    let mut cms = Vec::new();
                    for kind in kinds {
                        let m = out.attempt("measure", gradient_measure(f, kind, s));
                        if let Some(v) = m.and_then(|m| out.attempt("cm", cm_constant(&m, p, g, &ad))) {
                            cms.push(v.value);
                        }
                    }
                    if cms.len() != kinds.len() {
                        continue;
                    }
                    for (k, &(_, i, j)) in pairs.iter().enumerate() {
                        ratios[k].push(cms[i] / cms[j]);
                    }
                    if n >= 2 {
                        let m = out.attempt("measure", gradient_measure(f, GradientKind::TangentialSum, s));
                        if let Some(v) = m.and_then(|m| out.attempt("cm", cm_constant(&m, p, g, &ad))) {
                            tangential_worst = tangential_worst.max(v.value / cms[0]);
                        }
                    }
                }
                brackets.push(ratios.map(Bracket::of));
            }
            let probes = fam.len();
            for (k, &(name, _, _)) in pairs.iter().enumerate() {
                let (Some(b0), Some(b1)) = (brackets[0][k], brackets[1][k]) else { continue };
                out.push(Check::info(format!("cm[{name}]_lo"), n, Some(s), b0.lo, probes));
                out.push(Check::info(format!("cm[{name}]_hi"), n, Some(s), b0.hi, probes));
                out.push(Check::info(format!("cm[{name}]_lo_refined"), n, Some(s), b1.lo, probes));
                out.push(Check::info(format!("cm[{name}]_hi_refined"), n, Some(s), b1.hi, probes));
                out.push(Check::at_most(format!("cm[{name}]_drift"), n, Some(s), b0.drift(&b1), probes, STABILITY_TOL));
            }
            if n >= 2 {
                // Σ|T_ij f|² ≤ |∇̃f|²/(1−|z|²) pointwise, so the constant is 1.
                out.push(Check::at_most("cm[tangential/inv_grad]_max", n, Some(s), tangential_worst, 2 * probes, 1.0 + 1e-12));
            }
        }
    }
    out
}

// ---------------------------------------------------------------- 10

fn canonical_atoms(cfg: &ExperimentConfig) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(10, title(10));
    let mut rng = rng_for(cfg, 10);
    let ad = adapt(cfg.level);
    let radii = [0.0, 0.25, 0.5, 0.7, 0.9, 0.99];
    let s_list = cfg.s_values(&[-0.25, 0.0, 0.25]);
    for n in cfg.dims(&[1, 2]) {
        let dir = random_direction(n, &mut rng);
        let centers: Vec<CVec> = radii.iter().map(|&r| dir.scale(r)).collect();
        let Some(atoms) = out.attempt("atoms", centers.iter().map(|a| canonical_atom(a, 0.0, n)).collect::<crate::Result<Vec<_>>>()) else {
            continue;
        };
        let spec = scaled_spec(cfg, norm_grid_spec(n));
        let Some(grid) = out.attempt("grid", SupGrid::build(n, &spec, std::slice::from_ref(&dir), stream_seed(cfg.seed, "atoms/10"))) else { continue };
        let tables: Vec<OscTable> = atoms.iter().filter_map(|f| out.attempt("osc", OscTable::compute(f, &grid, &ad))).collect();
        if tables.len() != atoms.len() {
            continue;
        }
        for &s in &s_list {
            let norms: Vec<f64> = tables.iter().zip(&centers).map(|(t, a)| t.scaled((1.0 - a.norm_sq()).powf(-s)).norm(s).value).collect();
            let Some(b) = Bracket::of(norms.iter().copied()) else { continue };
            for (a, v) in centers.iter().zip(&norms) {
                out.push(Check::info(format!("norm(|a|={})", a.norm()), n, Some(s), *v, 1));
            }
            out.push(Check::at_most("sup_over_inf_norm", n, Some(s), b.hi / b.lo, norms.len(), 10.0));
            let mut worst = 0.0f64;
            for r in [0.1, 0.5, 0.7, 0.9, 0.99, 0.999] {
                let a = dir.scale(r);
                let Some(f) = out.attempt("atom", canonical_atom(&a, s, n)) else { continue };
                let g = f.grad(&a).norm() * (1.0 - a.norm_sq()).powf(1.0 + s);
                worst = worst.max((g - n as f64 * a.norm()).abs());
            }
            out.push(Check::at_most("sharpness_n_abs_a", n, Some(s), worst, 6, 1e-12));
        }
    }
    out
}

// ---------------------------------------------------------------- 11

fn lattice_synthesis(cfg: &ExperimentConfig) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(11, title(11));
    let mut rng = rng_for(cfg, 11);
    let (r, rho_max) = (0.7, 0.95);
    for n in cfg.dims(&[1]) {
        for s in cfg.s_values(&[0.25]) {
            let Some(lat) = out.attempt("lattice", generate_lattice(n, r, rho_max, stream_seed(cfg.seed, "atoms/11"))) else { continue };
            let st = &lat.stats;
            out.push(Check::info("lattice_points", n, None, lat.points.len() as f64, st.passes));
            out.push(Check::at_least("min_separation_over_half_r", n, None, st.min_separation / (r / 2.0), lat.points.len(), 1.0));
            out.push(Check::at_least("covering_fraction", n, None, st.covering_fraction, st.probes, crate::lattice::COVERING_TARGET));
            out.push(Check::info("max_overlap", n, None, st.max_overlap as f64, st.probes));

            // Up to 40 lattice points spread over the radial range.
            let mut pts = lat.points.clone();
            pts.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
            let take = pts.len().min(40);
            let centers: Vec<CVec> = (0..take).map(|k| pts[k * pts.len() / take].clone()).collect();
            let dirs: Vec<CVec> = centers.iter().filter(|a| a.norm() > 0.5).map(|a| a.direction()).collect();
            let spec = GridSpec { centers: 64, radii: 12, r_min: 0.02, r_max: 1.0, random: 0 };
            let Some((g0, g1)) = out.attempt("grid", grid_pair(cfg, n, spec, &dirs, "atoms/11/grid")) else { continue };
            let b = n as f64 + 1.0;
            let mut consts = [0.0f64; 2];
            const DRAWS: usize = 10;
            for _ in 0..DRAWS {
                let coeffs: Vec<Complex64> = centers.iter().map(|_| random_unit_disk(&mut rng)).collect();
                let Some(f) = out.attempt("synthesize", synthesize(&coeffs, &centers, b)) else { continue };
                for (k, (g, level)) in [(&g0, cfg.level), (&g1, cfg.level + 1)].into_iter().enumerate() {
                    let ad = adapt(level);
                    let norm = out.attempt("norm", OscTable::compute(&f, g, &ad)).map(|t| t.norm(s).value);
                    let cm = out.attempt("coeff cm", coeff_cm(&coeffs, &centers, s, g, CoeffFlavor::Atomic));
                    if let (Some(norm), Some(cm)) = (norm, cm) {
                        consts[k] = consts[k].max(norm / cm.value);
                    }
                }
            }
            out.push(Check::info("synthesis_C", n, Some(s), consts[0], DRAWS));
            out.push(Check::info("synthesis_C_refined", n, Some(s), consts[1], DRAWS));
            out.push(Check::at_most("synthesis_C_drift", n, Some(s), rel_drift(consts[0], consts[1]), DRAWS, STABILITY_TOL));
        }
    }
    out
}

// ---------------------------------------------------------------- 12

fn tent_embedding(cfg: &ExperimentConfig) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(12, title(12));
    let mut rng = rng_for(cfg, 12);
    for n in cfg.dims(&[1]) {
        for s in cfg.s_values(&[0.25]) {
            let p = 1.0 - 2.0 * s / n as f64;
            let Some(fam) = out.attempt("family", family(n, s, &FAMILY_RADII, 20, &mut rng)) else { continue };
            let measures: Vec<MeasureSpec> = (0..10).filter_map(|_| out.attempt("measure", random_discrete(n, 10, 0.95, &mut rng))).collect();
            let mut dirs = atom_directions(&fam);
            for mu in &measures {
                if let MeasureSpec::Discrete { atoms, .. } = mu {
                    dirs.extend(atoms.iter().filter(|(_, a)| a.norm() > 0.5).map(|(_, a)| a.direction()));
                }
            }
            let Some((g0, g1)) = out.attempt("grid", grid_pair(cfg, n, GridSpec::default_for(n), &dirs, &format!("tent/12/{n}"))) else {
                continue;
            };
            let mut consts = [0.0f64; 2];
            let mut identity = 0.0f64;
            for (k, (g, level)) in [(&g0, cfg.level), (&g1, cfg.level + 1)].into_iter().enumerate() {
                let ad = adapt(level);
                let norms: Vec<f64> = fam.iter().filter_map(|f| out.attempt("norm", OscTable::compute(f, g, &ad)).map(|t| t.norm(s).value)).collect();
                for mu in &measures {
                    let Some(cm1) = out.attempt("cm", cm_constant(mu, 1.0, g, &ad)) else { continue };
                    for (f, hc) in fam.iter().zip(&norms) {
                        if let Some(t) = out.attempt("tent", tent_norm(f, s, mu, g, &ad)) {
                            consts[k] = consts[k].max(t.value / (cm1.value * hc));
                        }
                    }
                    if k == 0 {
                        let one = HoloFun::constant(n, c(1.0));
                        let t = out.attempt("tent of 1", tent_norm(&one, s, mu, g, &ad));
                        let cmp = out.attempt("cm", cm_constant(mu, p, g, &ad));
                        if let (Some(t), Some(cmp)) = (t, cmp) {
                            identity = identity.max(rel_drift(cmp.value, t.value));
                        }
                    }
                }
            }
            let probes = fam.len() * measures.len();
            out.push(Check::info("tent_C", n, Some(s), consts[0], probes));
            out.push(Check::info("tent_C_refined", n, Some(s), consts[1], probes));
            out.push(Check::at_most("tent_C_drift", n, Some(s), rel_drift(consts[0], consts[1]), probes, STABILITY_TOL));
            out.push(Check::at_most("tent_of_one_equals_cm", n, Some(s), identity, measures.len(), 1e-12));
        }
    }
    out
}

// ---------------------------------------------------------------- 13

/// Admissible `(p, η, a, b)` for `n = 1`.
const TAB_TUPLES: [(f64, f64, f64, f64); 5] =
    [(1.0, 1.0, 0.0, 1.5), (0.5, 1.0, 0.25, 1.5), (1.5, 0.5, 0.0, 1.0), (1.0, 0.5, -0.5, 1.25), (0.75, 1.5, 0.5, 2.0)];

fn tab_preservation_check(cfg: &ExperimentConfig) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(13, title(13));
    let mut rng = rng_for(cfg, 13);
    for n in cfg.dims(&[1]) {
        let a = random_direction(n, &mut rng).scale(0.8);
        let Some(fa) = out.attempt("atom", canonical_atom(&a, 0.25, n)) else { continue };
        let h = fa.clone();
        let f = RealFun::new(n, "|grad f_a|", fa.features(), move |z| h.grad(z).norm());
        let spec = GridSpec { centers: 32, radii: 8, r_min: 0.02, r_max: 1.0, random: 0 };
        let Some((g0, g1)) = out.attempt("grid", grid_pair(cfg, n, spec, &[a.direction()], "carleson/13")) else { continue };
        let mut consts = [0.0f64; 2];
        for (k, &(p, eta, ta, tb)) in TAB_TUPLES.iter().enumerate() {
            let Some(params) = out.attempt("parameters", TabParams::new(n, p, eta, ta, tb)) else { continue };
            let mut ratios = [0.0; 2];
            // The output density nests one ball integral inside another, so
            // it runs one level above the base.
            for (i, (g, level)) in [(&g0, cfg.level + 1), (&g1, cfg.level + 2)].into_iter().enumerate() {
                if let Some(r) = out.attempt("preservation", tab_preservation(&f, &params, g, &adapt(level.min(6)))) {
                    ratios[i] = r.ratio;
                    consts[i] = consts[i].max(r.ratio);
                }
            }
            let tag = format!("tuple{k}(p={p},eta={eta},a={ta},b={tb})");
            out.push(Check::info(format!("{tag}_ratio"), n, None, ratios[0], 1));
            out.push(Check::info(format!("{tag}_drift"), n, None, rel_drift(ratios[0], ratios[1]), 1));
        }
        out.push(Check::info("tab_C", n, None, consts[0], TAB_TUPLES.len()));
        out.push(Check::info("tab_C_refined", n, None, consts[1], TAB_TUPLES.len()));
        out.push(Check::at_most("tab_C_drift", n, None, rel_drift(consts[0], consts[1]), TAB_TUPLES.len(), STABILITY_TOL));
    }
    out
}

// ---------------------------------------------------------------- 14

/// Keeps tuples at least this far from every case boundary.
const CASE_MARGIN: f64 = 0.15;

fn sample_case(n: usize, want: FrCase, rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
    let n1 = n as f64 + 1.0;
    loop {
        let s = -0.9 + 2.9 * rng.random::<f64>();
        let r = 7.0 * rng.random::<f64>();
        let t = 7.0 * rng.random::<f64>();
        let (dr, dt) = (r - s - n1, t - s - n1);
        if r + t - s < n1 + CASE_MARGIN || dr.abs() < CASE_MARGIN || dt.abs() < CASE_MARGIN {
            continue;
        }
        if crate::carleson::fr_case(n, s, r, t).ok() == Some(want) {
            return (s, r, t);
        }
    }
}

fn two_kernel_bound(cfg: &ExperimentConfig) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(14, title(14));
    let mut rng = rng_for(cfg, 14);
    const TUPLES: usize = 100;
    for n in cfg.dims(&[1]) {
        for case in [FrCase::BothBelow, FrCase::RAbove, FrCase::TAbove, FrCase::BothAbove] {
            let tuples: Vec<_> = (0..TUPLES)
                .map(|_| (sample_case(n, case, &mut rng), random_point(n, 0.9, &mut rng), random_point(n, 0.9, &mut rng)))
                .collect();
            let mut consts = [0.0f64; 2];
            for (k, level) in [cfg.level, cfg.level + 1].into_iter().enumerate() {
                let ad = adapt(level);
                for ((s, r, t), z, w) in &tuples {
                    if let Some(res) = out.attempt("bound", forelli_rudin_check(*s, *r, *t, z, w, &ad)) {
                        consts[k] = consts[k].max(res.ratio);
                    }
                }
            }
            out.push(Check::info(format!("C[{case}]"), n, None, consts[0], TUPLES));
            out.push(Check::info(format!("C[{case}]_refined"), n, None, consts[1], TUPLES));
            out.push(Check::at_most(format!("C[{case}]_drift"), n, None, rel_drift(consts[0], consts[1]), TUPLES, STABILITY_TOL));
        }
    }
    out
}

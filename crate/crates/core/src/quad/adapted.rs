//! Quadrature adapted to caps, tubes and boundary features.
//!
//! A cap `Q(ζ, r)` or tube `Q_r(ζ)` is parameterized by the lens coordinate
//! `w = 1 − ⟨ξ, ζ⟩`, which ranges over `{|w| < r, |1 − w| ≤ 1}`. In polar form
//! `w = ρ e^{iθ}` with `|θ| ≤ arccos(ρ/2)`, and θ is written as
//! `θ_max sin φ` to absorb the square-root edge behaviour. The remaining
//! directions, orthogonal to ζ, form a sphere `S_{n−1}` (caps) or ball
//! `B_{n−1}` (tubes) of radius `(1 − |1 − w|²)^{1/2}`.
//!
//! Panels are composite Gauss–Legendre and are graded geometrically toward
//! every [`Feature`], with the grading in each inner coordinate scaled by the
//! distance to the feature in the outer ones. Every node is reported with the
//! index of the smallest requested radius whose region contains it, so one
//! pass yields nested integrals for all radii.

use crate::geom::{unitary_frame, CVec};
use crate::holofun::Feature;
use crate::quad::qmc;
use crate::special::{cap_panel_width, composite_gl, finish_breaks, graded_breaks};
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// Resolution parameters of the adapted rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptConfig {
    /// Gauss–Legendre points per panel.
    pub m: usize,
    /// Widest panel allowed in ρ, φ and `|y|²`.
    pub max_width: f64,
    /// Trapezoid points for an ungraded phase.
    pub phase_points: usize,
    /// Points of the inner quasi-random rule used when `n ≥ 3`.
    pub inner_points: usize,
}

impl AdaptConfig {
    pub fn for_level(level: u32) -> Self {
        let l = level.max(1) as usize;
        AdaptConfig { m: 1 + 2 * l, max_width: 1.0, phase_points: 6 + 4 * l, inner_points: 64 * l }
    }
}

/// A feature expressed in the unitary frame of a center.
struct Local {
    v: Vec<Complex64>,
    h: f64,
    wf: Complex64,
    rho: f64,
}

fn localize(frame: &[CVec], features: &[Feature]) -> Vec<Local> {
    features
        .iter()
        .map(|f| {
            let v: Vec<Complex64> = frame.iter().map(|e| f.dir.dot(e)).collect();
            let wf = Complex64::new(1.0, 0.0) - v[0];
            Local { h: f.scale.max(1e-12), rho: wf.norm(), wf, v }
        })
        .collect()
}

fn shell_of(radii: &[f64], x: f64) -> usize {
    radii.partition_point(|&r| r <= x)
}

/// ρ nodes `(ρ, weight, shell)` for the given radii. Panels are integrated
/// in `γ = arccos(ρ/2)`, which removes the square-root vanishing of the lens
/// width at `ρ = 2`.
fn rho_nodes(radii: &[f64], locals: &[Local], cfg: &AdaptConfig) -> Vec<(f64, f64, usize)> {
    let rho_max = radii.last().copied().unwrap_or(0.0).min(2.0);
    let mut b = vec![0.0, rho_max];
    for &r in radii {
        if r < rho_max {
            b.push(r);
        }
    }
    for l in locals {
        graded_breaks(0.0, rho_max, l.rho, l.h, &mut b);
    }
    let b = cap_panel_width(&finish_breaks(b), cfg.max_width * 0.5);
    let clipped: Vec<f64> = radii.iter().map(|r| r.min(2.0)).collect();
    let mut nodes = Vec::new();
    let mut panel = Vec::new();
    for p in b.windows(2) {
        let (g0, g1) = ((p[1] / 2.0).min(1.0).acos(), (p[0] / 2.0).min(1.0).acos());
        panel.clear();
        composite_gl(&[g0, g1], cfg.m, &mut panel);
        for &(g, w) in &panel {
            let rho = 2.0 * g.cos();
            nodes.push((rho, w * 2.0 * g.sin(), shell_of(&clipped, rho)));
        }
    }
    nodes
}

/// φ nodes at fixed ρ as `(θ, weight in dθ)`.
fn theta_nodes(rho: f64, locals: &[Local], cfg: &AdaptConfig, out: &mut Vec<(f64, f64)>) {
    out.clear();
    let theta_max = (rho / 2.0).min(1.0).acos();
    if theta_max <= 0.0 {
        return;
    }
    let mut b = vec![-FRAC_PI_2, 0.0, FRAC_PI_2];
    for l in locals {
        let d = l.h.max((rho - l.rho).abs());
        let s = d / (rho.max(1e-300) * theta_max);
        if s < 0.5 {
            let th = l.wf.arg();
            let phi_f = (th / theta_max).clamp(-1.0, 1.0).asin();
            graded_breaks(-FRAC_PI_2, FRAC_PI_2, phi_f, s, &mut b);
        }
    }
    let b = cap_panel_width(&finish_breaks(b), cfg.max_width * 1.6);
    let mut phi = Vec::new();
    composite_gl(&b, cfg.m + 2, &mut phi);
    for (p, w) in phi {
        out.push((theta_max * p.sin(), w * theta_max * p.cos()));
    }
}

/// Distance data for the inner (second-frame) coordinate: `|A|` with
/// `A = 1 − ξ_1 v̄_1`, and `|v_2|`. Over a circle of radius `c` the distance
/// `|1 − ⟨ξ, u⟩|` is smallest, `||A| − c|`, at phase `arg A + arg v_2`.
fn inner_geometry(l: &Local, xi1: Complex64) -> Option<(f64, f64, f64)> {
    let v2 = l.v.get(1).copied().unwrap_or_default().norm();
    if v2 == 0.0 {
        return None;
    }
    let a = Complex64::new(1.0, 0.0) - xi1 * l.v[0].conj();
    Some((a.norm(), v2, a.arg() + l.v[1].arg()))
}

/// Phase rule normalized to total weight one on a circle of radius
/// `radius` in the second frame direction, graded toward features.
fn phase_nodes(xi1: Complex64, radius: f64, locals: &[Local], cfg: &AdaptConfig, out: &mut Vec<(f64, f64)>) {
    out.clear();
    let mut focus: Vec<(f64, f64)> = Vec::new();
    if radius > 0.0 {
        for l in locals {
            if let Some((a, v2, psi)) = inner_geometry(l, xi1) {
                let c = radius * v2;
                let s = (l.h + (a - c).abs()) / (a * c).sqrt();
                if s < 0.5 {
                    focus.push((psi, s));
                }
            }
        }
    }
    if focus.is_empty() {
        let p = cfg.phase_points;
        for j in 0..p {
            out.push((TAU * j as f64 / p as f64, 1.0 / p as f64));
        }
        return;
    }
    let lo = focus[0].0 - PI;
    let hi = lo + TAU;
    let mut b: Vec<f64> = (0..=4).map(|j| lo + FRAC_PI_2 * j as f64).collect();
    for &(psi, s) in &focus {
        let centered = lo + (psi - lo).rem_euclid(TAU);
        graded_breaks(lo, hi, centered, s, &mut b);
    }
    let b = cap_panel_width(&finish_breaks(b), cfg.max_width * 2.0);
    composite_gl(&b, cfg.m, out);
    out.iter_mut().for_each(|p| p.1 /= TAU);
}

/// Radial rule for `q = |y|²` on the inner disk (weight `dq`), graded toward
/// `q = 1` when a feature is close to the rim.
fn inner_q_nodes(xi1: Complex64, r2: f64, locals: &[Local], cfg: &AdaptConfig, out: &mut Vec<(f64, f64)>) {
    out.clear();
    let mut b = vec![0.0, 0.5, 1.0];
    let rim = r2.sqrt();
    for l in locals {
        if let Some((a, v2, _)) = inner_geometry(l, xi1) {
            let c = rim * v2;
            let s = 2.0 * (l.h + (a - c).max(0.0)) / c.max(1e-300);
            if s < 0.5 {
                graded_breaks(0.0, 1.0, 1.0, s, &mut b);
            }
        }
    }
    let b = cap_panel_width(&finish_breaks(b), cfg.max_width);
    composite_gl(&b, cfg.m, out);
}

fn inner_sphere_points(dim: usize, count: usize) -> Vec<CVec> {
    let d = qmc::sphere_cube_dim(dim);
    qmc::kronecker_points(d, count, &vec![0.5; d]).iter().map(|u| qmc::cube_to_sphere(dim, u)).collect()
}

fn combine(frame: &[CVec], xi1: Complex64, tail: &[Complex64]) -> CVec {
    let n = frame.len();
    let mut z = frame[0].scale_c(xi1);
    for (j, t) in tail.iter().enumerate() {
        if j + 1 >= n {
            break;
        }
        for k in 0..n {
            z.coords_mut()[k] += frame[j + 1][k] * t;
        }
    }
    z
}

/// Visit nodes of a σ-rule on the caps `Q(center, r_k)`: `visit(k, ξ, w)`
/// where `k` indexes the smallest radius whose cap contains ξ. `radii` must be
/// increasing in `(0, 2]`; the last radius 2 gives the whole sphere.
pub fn sphere_nodes<V: FnMut(usize, &CVec, f64)>(
    n: usize,
    center: &CVec,
    radii: &[f64],
    features: &[Feature],
    cfg: &AdaptConfig,
    mut visit: V,
) {
    if radii.is_empty() {
        return;
    }
    if n == 1 {
        arc_nodes(center, radii, features, cfg, visit);
        return;
    }
    let frame = unitary_frame(center);
    let locals = localize(&frame, features);
    let nf = n as f64;
    let inner = if n >= 3 { inner_sphere_points(n - 1, cfg.inner_points) } else { Vec::new() };
    let mut thetas = Vec::new();
    let mut phases = Vec::new();
    let mut tail = vec![Complex64::default(); n - 1];
    for (rho, wr, shell) in rho_nodes(radii, &locals, cfg) {
        theta_nodes(rho, &locals, cfg, &mut thetas);
        for &(theta, wt) in &thetas {
            let w = Complex64::from_polar(rho, theta);
            let xi1 = Complex64::new(1.0, 0.0) - w;
            let r2 = (2.0 * rho * theta.cos() - rho * rho).max(0.0);
            let radius = r2.sqrt();
            let base = wr * wt * rho * (nf - 1.0) / PI * r2.powi(n as i32 - 2);
            if n == 2 {
                phase_nodes(xi1, radius, &locals, cfg, &mut phases);
                for &(psi, wp) in &phases {
                    tail[0] = Complex64::from_polar(radius, psi);
                    visit(shell, &combine(&frame, xi1, &tail), base * wp);
                }
            } else {
                let wp = 1.0 / inner.len() as f64;
                for eta in &inner {
                    for (j, c) in eta.coords().iter().enumerate() {
                        tail[j] = c * radius;
                    }
                    visit(shell, &combine(&frame, xi1, &tail), base * wp);
                }
            }
        }
    }
}

fn arc_nodes<V: FnMut(usize, &CVec, f64)>(center: &CVec, radii: &[f64], features: &[Feature], cfg: &AdaptConfig, mut visit: V) {
    let zeta = center[0];
    let angles: Vec<f64> = radii.iter().map(|&r| 2.0 * (r / 2.0).min(1.0).asin()).collect();
    let amax = *angles.last().expect("non-empty radii");
    let mut b = vec![-amax, 0.0, amax];
    for &a in &angles {
        if a < amax {
            b.push(a);
            b.push(-a);
        }
    }
    for f in features {
        let psi = (f.dir[0] * zeta.conj()).arg();
        graded_breaks(-amax, amax, psi, f.scale.max(1e-12), &mut b);
    }
    let b = cap_panel_width(&finish_breaks(b), cfg.max_width);
    let mut nodes = Vec::new();
    composite_gl(&b, cfg.m, &mut nodes);
    for (psi, w) in nodes {
        let shell = shell_of(&angles, psi.abs());
        let xi = CVec::new([zeta * Complex64::from_polar(1.0, psi)]);
        visit(shell, &xi, w / TAU);
    }
}

/// Visit nodes of a ν-rule on the tubes `Q_r(center)`, as [`sphere_nodes`]
/// does for caps. The last radius 2 gives the whole ball.
pub fn ball_nodes<V: FnMut(usize, &CVec, f64)>(
    n: usize,
    center: &CVec,
    radii: &[f64],
    features: &[Feature],
    cfg: &AdaptConfig,
    mut visit: V,
) {
    if radii.is_empty() {
        return;
    }
    let frame = unitary_frame(center);
    let locals = localize(&frame, features);
    let nf = n as f64;
    let inner_dirs = if n >= 3 { inner_sphere_points(n - 1, cfg.inner_points) } else { Vec::new() };
    let mut inner_radial = Vec::new();
    if n >= 3 {
        composite_gl(&[0.0, 0.5, 0.75, 0.875, 1.0], cfg.m, &mut inner_radial);
    }
    let mut thetas = Vec::new();
    let mut phases = Vec::new();
    let mut qs = Vec::new();
    let mut tail = vec![Complex64::default(); n.saturating_sub(1)];
    for (rho, wr, shell) in rho_nodes(radii, &locals, cfg) {
        theta_nodes(rho, &locals, cfg, &mut thetas);
        for &(theta, wt) in &thetas {
            let w = Complex64::from_polar(rho, theta);
            let xi1 = Complex64::new(1.0, 0.0) - w;
            let r2 = (2.0 * rho * theta.cos() - rho * rho).max(0.0);
            let base = wr * wt * rho * nf / PI * r2.powi(n as i32 - 1);
            match n {
                1 => visit(shell, &frame[0].scale_c(xi1), base),
                2 => {
                    inner_q_nodes(xi1, r2, &locals, cfg, &mut qs);
                    for &(q, wq) in &qs {
                        let radius = (r2 * q).sqrt();
                        phase_nodes(xi1, radius, &locals, cfg, &mut phases);
                        for &(psi, wp) in &phases {
                            tail[0] = Complex64::from_polar(radius, psi);
                            visit(shell, &combine(&frame, xi1, &tail), base * wq * wp);
                        }
                    }
                }
                _ => {
                    let k = (n - 1) as f64;
                    let wd = 1.0 / inner_dirs.len() as f64;
                    for &(q, wq) in &inner_radial {
                        let radius = (r2 * q).sqrt();
                        let wrad = wq * k * q.powf(k - 1.0);
                        for eta in &inner_dirs {
                            for (j, c) in eta.coords().iter().enumerate() {
                                tail[j] = c * radius;
                            }
                            visit(shell, &combine(&frame, xi1, &tail), base * wrad * wd);
                        }
                    }
                }
            }
        }
    }
}

/// Features at or above this scale are left to the plain rules.
pub const FLAT_SCALE: f64 = 1.0;

/// Whole-sphere rule without features: trapezoid on the circle, a
/// Gauss × trapezoid × trapezoid torus rule in `(|ξ_1|², arg ξ_1, arg ξ_2)`
/// for `n = 2`, and a quasi-random rule beyond.
fn plain_sphere(n: usize, cfg: &AdaptConfig, out: &mut Vec<(CVec, f64)>) {
    match n {
        1 => {
            let p = 2 * cfg.phase_points;
            for j in 0..p {
                out.push((CVec::new([Complex64::from_polar(1.0, TAU * j as f64 / p as f64)]), 1.0 / p as f64));
            }
        }
        2 => {
            let mut xs = Vec::new();
            composite_gl(&[0.0, 0.5, 1.0], cfg.m, &mut xs);
            let p = cfg.phase_points;
            for &(x, wx) in &xs {
                for i in 0..p {
                    for j in 0..p {
                        let a = TAU * i as f64 / p as f64;
                        let b = TAU * (j as f64 + 0.5) / p as f64;
                        let z = CVec::new([Complex64::from_polar(x.sqrt(), a), Complex64::from_polar((1.0 - x).sqrt(), b)]);
                        out.push((z, wx / (p * p) as f64));
                    }
                }
            }
        }
        _ => {
            let pts = inner_sphere_points(n, 16 * cfg.inner_points);
            let w = 1.0 / pts.len() as f64;
            out.extend(pts.into_iter().map(|z| (z, w)));
        }
    }
}

/// A whole-sphere σ-rule graded toward the given features.
pub fn sphere_rule_adapted(n: usize, features: &[Feature], cfg: &AdaptConfig) -> Vec<(CVec, f64)> {
    let mut out = Vec::new();
    let active: Vec<Feature> = features.iter().filter(|f| f.scale < FLAT_SCALE).cloned().collect();
    if active.is_empty() {
        plain_sphere(n, cfg, &mut out);
        return out;
    }
    let center = active[0].dir.clone();
    sphere_nodes(n, &center, &[2.0], &active, cfg, |_, z, w| out.push((z.clone(), w)));
    out
}

/// Visit a ν-rule on `{|z|² > v_min}` in polar form `z = √v ξ` as
/// `visit(z, v, w)`: composite Gauss–Legendre in `v` graded toward the
/// boundary (and toward `v_min` when `origin_singular`), with a whole-sphere
/// rule per radial panel whose feature grading is limited to the panel's
/// distance from the boundary.
pub fn ball_polar_nodes<V: FnMut(&CVec, f64, f64)>(
    n: usize,
    features: &[Feature],
    v_min: f64,
    origin_singular: bool,
    cfg: &AdaptConfig,
    visit: V,
) {
    polar_nodes(n, features, v_min, origin_singular, 0.0, cfg, visit)
}

/// As [`ball_polar_nodes`] on the whole ball for `(1−|z|²)^e dν` with
/// `e > −1`. The panel touching the sphere takes the weight exactly through
/// `u = (1−v)^{e+1}`; interior panels integrate in `ln(1−v)` when `e < 0`.
pub fn ball_polar_nodes_weighted<V: FnMut(&CVec, f64, f64)>(
    n: usize,
    features: &[Feature],
    e: f64,
    cfg: &AdaptConfig,
    visit: V,
) {
    assert!(e > -1.0, "weight exponent {e} must exceed -1");
    polar_nodes(n, features, 0.0, false, e, cfg, visit)
}

fn polar_nodes<V: FnMut(&CVec, f64, f64)>(
    n: usize,
    features: &[Feature],
    v_min: f64,
    origin_singular: bool,
    e: f64,
    cfg: &AdaptConfig,
    mut visit: V,
) {
    let hmin = features.iter().map(|f| f.scale).fold(0.25f64, f64::min).max(1e-12);
    let mut b = vec![v_min, 1.0];
    if v_min < 0.5 {
        b.push(0.5);
    }
    // Geometric toward the origin: a fixed depth for a singular integrand,
    // down to the cutoff when the origin is excluded.
    let mut d = 0.25;
    let levels = if origin_singular { 20 } else if v_min > 0.0 { 60 } else { 3 };
    for _ in 0..levels {
        if d <= v_min * 1.5 {
            break;
        }
        b.push(d);
        d *= 0.5;
    }
    graded_breaks(v_min, 1.0, 1.0, hmin * 0.25, &mut b);
    let b = cap_panel_width(&finish_breaks(b), cfg.max_width * 0.5);
    let nf = n as f64;
    for pair in b.windows(2) {
        let (va, vb) = (pair[0], pair[1]);
        let floor = 1.0 - vb.sqrt();
        let eff: Vec<Feature> = features
            .iter()
            .map(|f| Feature { dir: f.dir.clone(), scale: f.scale.max(floor) })
            .filter(|f| f.scale < FLAT_SCALE)
            .collect();
        let ang = sphere_rule_adapted(n, &eff, cfg);
        let mut radial = Vec::new();
        let k = e + 1.0;
        if e == 0.0 {
            composite_gl(&[va, vb], cfg.m, &mut radial);
        } else if vb >= 1.0 {
            // Boundary panel: geometric sub-panels toward the sphere, then
            // u = (1−v)^{e+1}, which takes the weight exactly, on the last.
            let x0 = (1.0 - va) * 0.5f64.powi(BOUNDARY_SPLITS);
            let mut x = 1.0 - va;
            while x > x0 * 1.5 {
                weighted_panel(1.0 - x, 1.0 - 0.5 * x, e, cfg.m, &mut radial);
                x *= 0.5;
            }
            let mut us = Vec::new();
            composite_gl(&[0.0, x0.powf(k)], cfg.m, &mut us);
            radial.extend(us.into_iter().map(|(u, wu)| (1.0 - u.powf(1.0 / k), wu / k)));
        } else {
            weighted_panel(va, vb, e, cfg.m, &mut radial);
        }
        for (v, wv) in radial {
            let r = v.sqrt();
            let wrad = wv * nf * v.powi(n as i32 - 1);
            for (xi, wa) in &ang {
                visit(&xi.scale(r), v, wrad * wa);
            }
        }
    }
}

/// Halvings of the boundary panel of [`ball_polar_nodes_weighted`].
const BOUNDARY_SPLITS: i32 = 16;

/// Gauss nodes on `[va, vb] ⊂ [0, 1)` for `(1−v)^e dv`: in `y = ln(1−v)`
/// when `e < 0`, which leaves the smooth factor `(1−v)^{e+1}`.
fn weighted_panel(va: f64, vb: f64, e: f64, m: usize, out: &mut Vec<(f64, f64)>) {
    if e < 0.0 {
        let mut ys = Vec::new();
        composite_gl(&[(1.0 - vb).ln(), (1.0 - va).ln()], m, &mut ys);
        out.extend(ys.into_iter().map(|(y, wy)| (1.0 - y.exp(), wy * ((e + 1.0) * y).exp())));
    } else {
        let start = out.len();
        composite_gl(&[va, vb], m, out);
        for (v, w) in out[start..].iter_mut() {
            *w *= (1.0 - *v).powf(e);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{cap_contains, tube_contains, TubeSpec};

    fn cfg() -> AdaptConfig {
        AdaptConfig::for_level(3)
    }

    fn e1(n: usize) -> CVec {
        CVec::basis(n, 0)
    }

    #[test]
    fn full_sphere_mass_is_one() {
        for n in 1..=3 {
            let mut s = 0.0;
            sphere_nodes(n, &e1(n), &[2.0], &[], &cfg(), |_, z, w| {
                assert!((z.norm() - 1.0).abs() < 1e-12);
                s += w;
            });
            assert!((s - 1.0).abs() < 1e-6, "n={n}: {s}");
        }
    }

    #[test]
    fn full_ball_mass_is_one() {
        for n in 1..=3 {
            let mut s = 0.0;
            ball_nodes(n, &e1(n), &[2.0], &[], &cfg(), |_, z, w| {
                assert!(z.norm() <= 1.0 + 1e-12);
                s += w;
            });
            assert!((s - 1.0).abs() < 1e-6, "n={n}: {s}");
        }
    }

    #[test]
    fn weighted_ball_rule_integrates_the_radial_weight() {
        // ∫ (1−|z|²)^e dν = n! Γ(e+1) / Γ(n+e+1). The adapted angular
        // rules hold constants to about 1e-9, which bounds the tolerance.
        for n in 1..=2usize {
            for e in [-0.95, -0.5, 0.0, 0.7] {
                let mut s = 0.0;
                ball_polar_nodes_weighted(n, &[Feature { dir: e1(n), scale: 0.05 }], e, &AdaptConfig::for_level(2), |_, _, w| s += w);
                let nf = n as f64;
                let want = (libm::lgamma(nf + 1.0) + libm::lgamma(e + 1.0) - libm::lgamma(nf + e + 1.0)).exp();
                assert!((s - want).abs() < 1e-8 * want, "n={n} e={e}: {s} vs {want}");
            }
        }
    }

    #[test]
    fn nodes_fall_in_their_shells() {
        let radii = [0.05, 0.2, 0.7];
        let center = CVec::boundary([Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]).unwrap();
        let feats = [Feature { dir: e1(2), scale: 0.01 }];
        sphere_nodes(2, &center, &radii, &feats, &cfg(), |k, z, _| {
            let t = TubeSpec::new(center.clone(), radii[k]).unwrap();
            assert!(cap_contains(&t, z));
            if k > 0 {
                let inner = TubeSpec::new(center.clone(), radii[k - 1]).unwrap();
                assert!(!cap_contains(&inner, z));
            }
        });
        ball_nodes(2, &center, &radii, &feats, &cfg(), |k, z, _| {
            let t = TubeSpec::new(center.clone(), radii[k]).unwrap();
            assert!(tube_contains(&t, z));
        });
    }

    #[test]
    fn peaked_poisson_kernel_has_unit_mass() {
        use crate::geom::poisson_kernel_unchecked;
        let a = CVec::interior([Complex64::new(0.0, 0.999), Complex64::new(0.0, 0.0)]).unwrap();
        let feats = [Feature { dir: a.direction(), scale: 1.0 - a.norm() }];
        let rule = sphere_rule_adapted(2, &feats, &cfg());
        let s: f64 = rule.iter().map(|(z, w)| w * poisson_kernel_unchecked(&a, z)).sum();
        assert!((s - 1.0).abs() < 1e-6, "{s}");
        let mut t = 0.0;
        arc_nodes(&CVec::basis(1, 0), &[2.0], &[Feature { dir: CVec::new([Complex64::new(0.0, 1.0)]), scale: 1e-4 }], &cfg(), |_, z, w| {
            let a1 = CVec::new([Complex64::new(0.0, 0.9999)]);
            t += w * poisson_kernel_unchecked(&a1, z);
        });
        assert!((t - 1.0).abs() < 1e-6, "{t}");
    }

    #[test]
    fn small_cap_measure_matches_closed_form() {
        let center = CVec::basis(2, 0);
        let radii = [0.01, 0.1, 0.5, 1.0, 2.0];
        let mut mass = [0.0; 5];
        sphere_nodes(2, &center, &radii, &[], &cfg(), |k, _, w| mass[k] += w);
        let mut cum = 0.0;
        for (k, &r) in radii.iter().enumerate() {
            cum += mass[k];
            let exact = lens_mass_n2(r);
            assert!((cum - exact).abs() < 1e-9 * exact, "r={r}: {cum} vs {exact}");
        }
    }

    /// σ-mass of `{|1 − ξ_1| < r}` in `S_2`: `|ξ_1|²` is uniform on `[0, 1]`
    /// and `arg ξ_1` is independent and uniform, so integrate the arc length.
    fn lens_mass_n2(r: f64) -> f64 {
        let f = |t: f64| {
            let x = t.sqrt();
            if x == 0.0 {
                return if r > 1.0 { 1.0 } else { 0.0 };
            }
            let c = (1.0 + x * x - r * r) / (2.0 * x);
            if c >= 1.0 {
                0.0
            } else if c <= -1.0 {
                1.0
            } else {
                c.acos() / PI
            }
        };
        crate::special::integrate_gk(|t| Complex64::new(f(t), 0.0), 0.0, 1.0, 1e-14, 1e-12, 4000).value.re
    }

    #[test]
    fn polar_ball_integrates_moments() {
        // ∫ |z_1|² dν = 1/(n+1)
        for n in 1..=3 {
            let mut s = 0.0;
            ball_polar_nodes(n, &[], 0.0, false, &cfg(), |z, _, w| s += w * z[0].norm_sqr());
            let tol = if n <= 2 { 1e-8 } else { 5e-3 };
            assert!((s - 1.0 / (n as f64 + 1.0)).abs() < tol, "n={n}: {s}");
        }
    }
}

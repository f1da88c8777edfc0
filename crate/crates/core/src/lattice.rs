//! Bergman-metric lattices, canonical atoms and atomic synthesis.

use crate::carleson::{cm_constant, CmReport, MeasureSpec};
use crate::error::{Error, Result};
use crate::geom::{bergman_dist_unchecked, CVec};
use crate::holofun::HoloFun;
use crate::norms::SupGrid;
use crate::quad::adapted::AdaptConfig;
use crate::quad::qmc;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Required share of probes within distance `r` of the lattice.
pub const COVERING_TARGET: f64 = 0.99;
const PASS_SIZE: usize = 2048;
const MAX_PASSES: usize = 256;
const PROBES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeStats {
    pub min_separation: f64,
    pub covering_fraction: f64,
    pub max_overlap: usize,
    pub probes: usize,
    pub passes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub n: usize,
    pub r: f64,
    pub rho_max: f64,
    pub seed: u64,
    pub points: Vec<CVec>,
    pub stats: LatticeStats,
    /// Set when the covering target was missed.
    pub warning: Option<String>,
}

/// Point of `{|z| ≤ ρ_max}` from `u ∈ [0,1)^{2n}`, uniform for the invariant
/// measure: `t = |z|²/(1−|z|²)` has `tⁿ` uniform on `[0, Tⁿ]`.
fn lambda_point(n: usize, u: &[f64], t_max: f64) -> CVec {
    let t = t_max * u[0].powf(1.0 / n as f64);
    let v = t / (1.0 + t);
    qmc::cube_to_sphere(n, &u[1..]).scale(v.sqrt())
}

fn t_of(rho: f64) -> f64 {
    rho * rho / (1.0 - rho * rho)
}

fn stream(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let d = 2 * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (qmc::kronecker_alpha(d), qmc::random_shift(d, &mut rng))
}

fn stream_point(alpha: &[f64], shift: &[f64], i: usize) -> Vec<f64> {
    alpha.iter().zip(shift).map(|(a, s)| (s + a * (i + 1) as f64).fract()).collect()
}

/// Greedy `r`-lattice in `{|z| ≤ ρ_max}`: candidates from a seeded Kronecker
/// stream (invariant-uniform), accepted when at Bergman distance `≥ r/2` from
/// every accepted point, until a whole pass accepts nothing.
pub fn generate_lattice(n: usize, r: f64, rho_max: f64, seed: u64) -> Result<Lattice> {
    if n == 0 {
        return Err(Error::OutOfRange("dimension must be positive".into()));
    }
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::OutOfRange(format!("lattice radius r = {r} outside (0, 1]")));
    }
    if !(rho_max > 0.0 && rho_max < 1.0) {
        return Err(Error::OutOfRange(format!("truncation radius {rho_max} outside (0, 1)")));
    }
    let t_max = t_of(rho_max);
    let (alpha, shift) = stream(n, seed);
    let mut points: Vec<CVec> = Vec::new();
    let mut next = 0usize;
    let mut passes = 0;
    while passes < MAX_PASSES {
        passes += 1;
        let mut accepted = 0;
        for _ in 0..PASS_SIZE {
            let z = lambda_point(n, &stream_point(&alpha, &shift, next), t_max);
            next += 1;
            if points.iter().all(|p| bergman_dist_unchecked(p, &z) >= r / 2.0) {
                points.push(z);
                accepted += 1;
            }
        }
        if accepted == 0 {
            break;
        }
    }
    let stats = lattice_stats(n, r, rho_max, &points, seed, passes);
    let warning = (stats.covering_fraction < COVERING_TARGET).then(|| {
        format!(
            "partial lattice: covering {:.4} < {COVERING_TARGET} with {} points after {passes} passes",
            stats.covering_fraction,
            points.len()
        )
    });
    Ok(Lattice { n, r, rho_max, seed, points, stats, warning })
}

/// Separation, covering over probes in `{β(0,z) ≤ β(0,ρ_max) − r}`, and the
/// largest number of `r/4`-balls holding one probe.
pub fn lattice_stats(n: usize, r: f64, rho_max: f64, points: &[CVec], seed: u64, passes: usize) -> LatticeStats {
    let mut min_sep = f64::INFINITY;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            min_sep = min_sep.min(bergman_dist_unchecked(&points[i], &points[j]));
        }
    }
    let inner = (rho_max.atanh() - r).max(0.0).tanh();
    let t_in = t_of(inner);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut covered = 0usize;
    let mut max_overlap = 0usize;
    for _ in 0..PROBES {
        let u: Vec<f64> = (0..2 * n).map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
        let z = lambda_point(n, &u, t_in);
        let mut best = f64::INFINITY;
        let mut overlap = 0;
        for p in points {
            let d = bergman_dist_unchecked(p, &z);
            best = best.min(d);
            if d < r / 4.0 {
                overlap += 1;
            }
        }
        if best <= r {
            covered += 1;
        }
        max_overlap = max_overlap.max(overlap);
    }
    LatticeStats { min_separation: min_sep, covering_fraction: covered as f64 / PROBES as f64, max_overlap, probes: PROBES, passes }
}

impl Lattice {
    /// Header `n r rho_max seed count` followed by one point per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {:e} {:e} {} {}\n", self.n, self.r, self.rho_max, self.seed, self.points.len());
        for p in &self.points {
            let row: Vec<String> = p.coords().iter().map(|c| format!("{:e} {:e}", c.re, c.im)).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    /// Read a cached lattice; the statistics are recomputed.
    pub fn from_text(text: &str) -> Result<Lattice> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, head) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty lattice file".into() })?;
        let h: Vec<&str> = head.split_whitespace().collect();
        let bad = |msg: &str| Error::Parse { line: 1, msg: msg.into() };
        if h.len() != 5 {
            return Err(bad("header needs n r rho_max seed count"));
        }
        let n: usize = h[0].parse().map_err(|_| bad("n"))?;
        let r: f64 = h[1].parse().map_err(|_| bad("r"))?;
        let rho_max: f64 = h[2].parse().map_err(|_| bad("rho_max"))?;
        let seed: u64 = h[3].parse().map_err(|_| bad("seed"))?;
        let count: usize = h[4].parse().map_err(|_| bad("count"))?;
        let mut points = Vec::with_capacity(count);
        for (i, l) in lines {
            let xs: Vec<f64> = l
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() }))
                .collect::<Result<_>>()?;
            if xs.len() != 2 * n {
                return Err(Error::Parse { line: i + 1, msg: format!("expected {} numbers", 2 * n) });
            }
            points.push(CVec::new((0..n).map(|k| Complex64::new(xs[2 * k], xs[2 * k + 1]))));
        }
        if points.len() != count {
            return Err(bad("point count does not match header"));
        }
        let stats = lattice_stats(n, r, rho_max, &points, seed, 0);
        Ok(Lattice { n, r, rho_max, seed, points, stats, warning: None })
    }
}

/// `f_a(z) = (1−|a|²)^{n−s} / (1−⟨z,a⟩)ⁿ`.
pub fn canonical_atom(a: &CVec, s: f64, n: usize) -> Result<HoloFun> {
    if a.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.dim() });
    }
    let nf = n as f64;
    if !(s > -0.5 && s <= nf / 2.0) {
        return Err(Error::OutOfRange(format!("s = {s} outside (-1/2, {}]", nf / 2.0)));
    }
    let c = (1.0 - a.norm_sq()).powf(nf - s);
    HoloFun::atom(Complex64::new(c, 0.0), a.clone(), nf)
}

/// `Σ c_k (1−|a_k|²)^b / (1−⟨z,a_k⟩)^b` with `b > n`.
pub fn synthesize(coeffs: &[Complex64], centers: &[CVec], b: f64) -> Result<HoloFun> {
    if coeffs.len() != centers.len() {
        return Err(Error::OutOfRange(format!("{} coefficients for {} centers", coeffs.len(), centers.len())));
    }
    let n = centers.first().map(|c| c.dim()).ok_or_else(|| Error::OutOfRange("no centers".into()))?;
    if !(b > n as f64) {
        return Err(Error::OutOfRange(format!("exponent b = {b} must exceed n = {n}")));
    }
    let mut f = HoloFun::zero(n);
    for (c, a) in coeffs.iter().zip(centers) {
        if a.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: a.dim() });
        }
        f.push_atom(c * (1.0 - a.norm_sq()).powf(b), a.clone(), b)?;
    }
    Ok(f)
}

/// Which coefficient measure [`coeff_cm`] tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffFlavor {
    /// `Σ |c_k|² (1−|a_k|²)ⁿ δ_{a_k}`.
    Atomic,
    /// `Σ |c_k|² (1−|a_k|²)^{n−2s} δ_{a_k}`.
    Weighted,
}

fn check_coeff_range(s: f64) -> Result<()> {
    if !(s > -0.5 && s < 0.5) {
        return Err(Error::OutOfRange(format!("s = {s} outside (-1/2, 1/2)")));
    }
    Ok(())
}

/// The coefficient measure of an atomic sum.
pub fn coeff_measure(coeffs: &[Complex64], centers: &[CVec], s: f64, flavor: CoeffFlavor) -> Result<MeasureSpec> {
    check_coeff_range(s)?;
    let n = centers.first().map(|c| c.dim()).ok_or_else(|| Error::OutOfRange("no centers".into()))?;
    if coeffs.len() != centers.len() {
        return Err(Error::OutOfRange(format!("{} coefficients for {} centers", coeffs.len(), centers.len())));
    }
    let nf = n as f64;
    let e = match flavor {
        CoeffFlavor::Atomic => nf,
        CoeffFlavor::Weighted => nf - 2.0 * s,
    };
    MeasureSpec::discrete(n, coeffs.iter().zip(centers).map(|(c, a)| (c.norm_sqr() * (1.0 - a.norm_sq()).powf(e), a.clone())).collect())
}

/// `‖coefficient measure‖_{CM_{1−2s/n}}` on the grid tubes.
pub fn coeff_cm(coeffs: &[Complex64], centers: &[CVec], s: f64, grid: &SupGrid, flavor: CoeffFlavor) -> Result<CmReport> {
    let mu = coeff_measure(coeffs, centers, s, flavor)?;
    cm_constant(&mu, 1.0 - 2.0 * s / mu.dim() as f64, grid, &AdaptConfig::for_level(1))
}

/// Sampled `sup_ω Σ_k (1−|ω|²)ⁿ (1−|a_k|²)^{n−2s} / |1−⟨a_k,ω⟩|^{2n−2s}`.
pub fn weighted_poisson_sup(centers: &[CVec], s: f64, omegas: &[CVec]) -> f64 {
    let one = Complex64::new(1.0, 0.0);
    omegas
        .iter()
        .map(|w| {
            let n = w.dim() as f64;
            let dw = (1.0 - w.norm_sq()).powf(n);
            centers
                .iter()
                .map(|a| dw * (1.0 - a.norm_sq()).powf(n - 2.0 * s) / (one - a.dot(w)).norm().powf(2.0 * n - 2.0 * s))
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::GridSpec;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn disc_lattice() {
        let l = generate_lattice(1, 0.5, 0.9, 7).unwrap();
        assert!(l.stats.min_separation >= 0.25);
        assert!(l.stats.covering_fraction >= COVERING_TARGET, "{:?}", l.stats);
        assert!(l.warning.is_none());
        assert!(l.stats.max_overlap <= 1);
        assert_eq!(l, generate_lattice(1, 0.5, 0.9, 7).unwrap());
        let back = Lattice::from_text(&l.to_text()).unwrap();
        assert_eq!(back.points.len(), l.points.len());
        for (a, b) in back.points.iter().zip(&l.points) {
            assert!(a.max_abs_diff(b) < 1e-15);
        }
    }

    #[test]
    fn ball_lattice() {
        let l = generate_lattice(2, 1.0, 0.7, 3).unwrap();
        assert!(l.stats.min_separation >= 0.5);
        assert!(l.stats.covering_fraction >= COVERING_TARGET, "{:?}", l.stats);
    }

    #[test]
    fn bad_lattice_parameters() {
        assert!(generate_lattice(1, 1.5, 0.9, 0).is_err());
        assert!(generate_lattice(1, 0.5, 1.0, 0).is_err());
    }

    #[test]
    fn canonical_atom_values() {
        let a = CVec::new([c(0.9)]);
        let f = canonical_atom(&a, 0.25, 1).unwrap();
        assert!((f.eval(&a).re - 0.19f64.powf(-0.25)).abs() < 1e-12);
        assert!((f.eval(&a).re - 1.5147).abs() < 1e-4);
        let one = canonical_atom(&CVec::zeros(2), 0.5, 2).unwrap();
        assert!((one.eval(&CVec::new([c(0.3), c(-0.2)])) - c(1.0)).norm() < 1e-15);
        assert!(canonical_atom(&a, -0.6, 1).is_err());
    }

    #[test]
    fn synthesis() {
        let one = synthesize(&[c(1.0)], &[CVec::zeros(1)], 2.0).unwrap();
        assert!((one.eval(&CVec::new([c(0.4)])) - c(1.0)).norm() < 1e-15);
        let a = CVec::new([Complex64::new(0.3, 0.5)]);
        let z = CVec::new([c(-0.6)]);
        let both = synthesize(&[c(1.0), Complex64::new(0.0, 2.0)], &[a.clone(), a.clone()], 2.0).unwrap();
        let p1 = synthesize(&[c(1.0)], std::slice::from_ref(&a), 2.0).unwrap();
        let p2 = synthesize(&[Complex64::new(0.0, 2.0)], std::slice::from_ref(&a), 2.0).unwrap();
        assert!((both.eval(&z) - p1.eval(&z) - p2.eval(&z)).norm() < 1e-12);
        assert!(synthesize(&[c(1.0)], std::slice::from_ref(&a), 1.0).is_err());
        assert!(synthesize(&[c(1.0), c(1.0)], &[a], 2.0).is_err());
    }

    #[test]
    fn coefficient_measures() {
        let spec = GridSpec { centers: 256, radii: 24, r_min: 0.01, r_max: 1.0, random: 0 };
        let g = SupGrid::build(1, &spec, &[], 0).unwrap();
        let a = CVec::new([c(0.8)]);
        let zero = coeff_cm(&[c(0.0)], std::slice::from_ref(&a), 0.25, &g, CoeffFlavor::Atomic).unwrap();
        assert_eq!(zero.value, 0.0);
        let one = coeff_cm(&[c(1.5)], std::slice::from_ref(&a), 0.25, &g, CoeffFlavor::Atomic).unwrap().value;
        let two = coeff_cm(&[c(3.0)], std::slice::from_ref(&a), 0.25, &g, CoeffFlavor::Atomic).unwrap().value;
        assert!((two - 2.0 * one).abs() < 1e-12 * two);
        // Tube scan: the smallest grid radius above min_ζ |1−⟨a,ζ⟩| over centers.
        let p = 1.0 - 0.5;
        let mut best = 0.0f64;
        for z in &g.centers {
            let d = (c(1.0) - a.dot(z)).norm();
            for &r in &g.radii {
                if d < r {
                    best = best.max(2.25 * 0.36 / r.powf(p));
                }
            }
        }
        assert!((one - best.sqrt()).abs() < 1e-12);
        assert!(coeff_cm(&[c(1.0)], &[a], 0.5, &g, CoeffFlavor::Weighted).is_err());
    }
}

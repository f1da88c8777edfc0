//! Quadrature on the sphere `S_n` and ball `B_n` for the normalized
//! measures σ and ν, weighted integrals, and integration restricted to caps
//! and tubes.

pub mod adapted;
pub mod qmc;

use crate::error::{Error, Result};
use crate::geom::{cap_contains, tube_contains, CVec, TubeSpec};
use crate::special::composite_gl;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

/// Default minimum number of rule nodes a cap or tube must contain.
pub const DEFAULT_NODE_FLOOR: usize = 200;
const QMC_BATCHES: u16 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Sphere,
    Ball,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleKind {
    Tensor,
    MonteCarlo,
    QuasiMc,
}

/// Nodes and weights for σ or ν. Nodes are grouped into batches, each of
/// which is a complete rule on its own; the spread of the batch estimates
/// gives the error estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub domain: Domain,
    pub n: usize,
    pub level: u32,
    pub kind: RuleKind,
    pub seed: u64,
    pub nodes: Vec<CVec>,
    pub weights: Vec<f64>,
    pub batch: Vec<u16>,
    pub n_batches: u16,
    /// Error estimate for a reference integrand (`|z_1|²` on the sphere,
    /// `1 − |z|²` on the ball).
    pub est_error: f64,
}

/// Weight applied to the integrand against ν (or σ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    None,
    /// `dλ = dν / (1 − |z|²)^{n+1}`; the caller asserts the integrand decays
    /// like `(1 − |z|²)^{n+decay}` with `decay > 0`.
    Lambda { decay: f64 },
    /// `(1 − |z|²)^c`.
    Power(f64),
}

/// Value with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
}

/// Result of a cap or tube restricted integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Restricted {
    pub value: Complex64,
    pub n_used: usize,
}

/// Whether a restricted integral returns the mean over the region or the
/// raw measure integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionMode {
    Mean,
    Measure,
}

fn check_level(level: u32) -> Result<()> {
    if !(1..=12).contains(&level) {
        return Err(Error::OutOfRange(format!("quadrature level {level} outside 1..=12")));
    }
    Ok(())
}

/// Rule for σ on `S_n`: the trapezoid rule on the circle for `n = 1`,
/// randomly shifted Kronecker batches otherwise.
pub fn sphere_rule(n: usize, level: u32, seed: u64) -> Result<QuadRule> {
    check_level(level)?;
    if n == 0 {
        return Err(Error::OutOfRange("dimension must be positive".into()));
    }
    let scale = 1usize << (level - 1);
    let mut rule = QuadRule {
        domain: Domain::Sphere,
        n,
        level,
        kind: RuleKind::Tensor,
        seed,
        nodes: Vec::new(),
        weights: Vec::new(),
        batch: Vec::new(),
        n_batches: 2,
        est_error: 0.0,
    };
    if n == 1 {
        let count = 64 * scale;
        for j in 0..count {
            rule.nodes.push(CVec::new([Complex64::from_polar(1.0, TAU * j as f64 / count as f64)]));
            rule.weights.push(1.0 / count as f64);
            rule.batch.push((j % 2) as u16);
        }
    } else {
        rule.kind = RuleKind::QuasiMc;
        rule.n_batches = QMC_BATCHES;
        let per = 256 * scale;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = qmc::sphere_cube_dim(n);
        let w = 1.0 / (per * QMC_BATCHES as usize) as f64;
        for b in 0..QMC_BATCHES {
            let shift = qmc::random_shift(d, &mut rng);
            for u in qmc::kronecker_points(d, per, &shift) {
                rule.nodes.push(qmc::cube_to_sphere(n, &u));
                rule.weights.push(w);
                rule.batch.push(b);
            }
        }
    }
    rule.est_error = integrate(|z| Complex64::new(z[0].norm_sqr(), 0.0), &rule, Weight::None)?.error;
    Ok(rule)
}

/// Radial breakpoints in `v = |z|²`, graded toward the boundary.
fn radial_breaks() -> Vec<f64> {
    let mut b = vec![0.0];
    let mut x = 0.5;
    for _ in 0..8 {
        b.push(1.0 - x);
        x *= 0.5;
    }
    b.push(1.0);
    b
}

/// Rule for ν on `B_n`: Gauss–Legendre in `v = |z|²` (weight `n v^{n−1}`)
/// times the trapezoid rule (`n = 1`) or shifted Kronecker directions.
pub fn ball_rule(n: usize, level: u32, seed: u64) -> Result<QuadRule> {
    check_level(level)?;
    if n == 0 {
        return Err(Error::OutOfRange("dimension must be positive".into()));
    }
    let scale = 1usize << (level - 1);
    let mut radial = Vec::new();
    composite_gl(&radial_breaks(), 4 + level as usize, &mut radial);
    let nf = n as f64;
    let mut rule = QuadRule {
        domain: Domain::Ball,
        n,
        level,
        kind: RuleKind::Tensor,
        seed,
        nodes: Vec::new(),
        weights: Vec::new(),
        batch: Vec::new(),
        n_batches: 2,
        est_error: 0.0,
    };
    if n == 1 {
        let count = 32 * scale;
        for &(v, wv) in &radial {
            let r = v.sqrt();
            for j in 0..count {
                rule.nodes.push(CVec::new([Complex64::from_polar(r, TAU * j as f64 / count as f64)]));
                rule.weights.push(wv / count as f64);
                rule.batch.push((j % 2) as u16);
            }
        }
    } else {
        rule.kind = RuleKind::QuasiMc;
        rule.n_batches = QMC_BATCHES;
        let per = 32 * scale;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = qmc::sphere_cube_dim(n);
        for b in 0..QMC_BATCHES {
            let shift = qmc::random_shift(d, &mut rng);
            let dirs: Vec<CVec> = qmc::kronecker_points(d, per, &shift).iter().map(|u| qmc::cube_to_sphere(n, u)).collect();
            for &(v, wv) in &radial {
                let wr = wv * nf * v.powi(n as i32 - 1) / (per * QMC_BATCHES as usize) as f64;
                let r = v.sqrt();
                for dir in &dirs {
                    rule.nodes.push(dir.scale(r));
                    rule.weights.push(wr);
                    rule.batch.push(b);
                }
            }
        }
    }
    let total: f64 = rule.weights.iter().sum();
    rule.weights.iter_mut().for_each(|w| *w /= total);
    rule.est_error = integrate(|z| Complex64::new(1.0 - z.norm_sq(), 0.0), &rule, Weight::None)?.error;
    Ok(rule)
}

/// Reject a λ-weighted integral unless the integrand is asserted to decay
/// like `(1 − |z|²)^{n+decay}` with `decay > 0`.
pub fn lambda_guard(decay: f64) -> Result<()> {
    if decay > 0.0 {
        Ok(())
    } else {
        Err(Error::LambdaGuard(decay))
    }
}

fn weight_factor(weight: Weight, n: usize, z: &CVec) -> Result<f64> {
    Ok(match weight {
        Weight::None => 1.0,
        Weight::Power(c) => (1.0 - z.norm_sq()).powf(c),
        Weight::Lambda { decay } => {
            lambda_guard(decay)?;
            (1.0 - z.norm_sq()).powi(-(n as i32 + 1))
        }
    })
}

/// `Σ w_i g(z_i) weight(z_i)` with the batch-spread error estimate.
pub fn integrate<F: FnMut(&CVec) -> Complex64>(mut g: F, rule: &QuadRule, weight: Weight) -> Result<Estimate> {
    if let Weight::Lambda { decay } = weight {
        if !(decay > 0.0) {
            return Err(Error::LambdaGuard(decay));
        }
    }
    let nb = rule.n_batches.max(1) as usize;
    let mut batch_sums = vec![Complex64::new(0.0, 0.0); nb];
    let mut total = Complex64::new(0.0, 0.0);
    for (i, z) in rule.nodes.iter().enumerate() {
        let v = g(z) * weight_factor(weight, rule.n, z)?;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite { node: i });
        }
        let wv = v * rule.weights[i];
        total += wv;
        batch_sums[rule.batch[i] as usize] += wv;
    }
    let error = if nb >= 2 {
        let means: Vec<Complex64> = batch_sums.iter().map(|s| s * nb as f64).collect();
        let mean: Complex64 = means.iter().sum::<Complex64>() / nb as f64;
        let var: f64 = means.iter().map(|m| (m - mean).norm_sqr()).sum::<f64>() / (nb - 1) as f64;
        (var / nb as f64).sqrt()
    } else {
        0.0
    };
    Ok(Estimate { value: total, error })
}

fn restricted<F, M>(mut g: F, rule: &QuadRule, mode: RegionMode, floor: usize, member: M) -> Result<Restricted>
where
    F: FnMut(&CVec) -> Complex64,
    M: Fn(&CVec) -> bool,
{
    let mut s = Complex64::new(0.0, 0.0);
    let mut w = 0.0;
    let mut used = 0;
    for (i, z) in rule.nodes.iter().enumerate() {
        if member(z) {
            let v = g(z);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite { node: i });
            }
            s += v * rule.weights[i];
            w += rule.weights[i];
            used += 1;
        }
    }
    if used < floor {
        return Err(Error::UnderResolved { used, floor });
    }
    let value = match mode {
        RegionMode::Mean => s / w,
        RegionMode::Measure => s,
    };
    Ok(Restricted { value, n_used: used })
}

/// Integral over the cap `Q(ζ, r)` by node filtering on a sphere rule.
pub fn integrate_cap<F: FnMut(&CVec) -> Complex64>(
    g: F,
    t: &TubeSpec,
    rule: &QuadRule,
    mode: RegionMode,
    floor: usize,
) -> Result<Restricted> {
    if rule.domain != Domain::Sphere {
        return Err(Error::OutOfRange("cap integration needs a sphere rule".into()));
    }
    restricted(g, rule, mode, floor, |z| cap_contains(t, z))
}

/// Integral over the tube `Q_r(ζ)` by node filtering on a ball rule.
pub fn integrate_tube<F: FnMut(&CVec) -> Complex64>(
    g: F,
    t: &TubeSpec,
    rule: &QuadRule,
    mode: RegionMode,
    floor: usize,
) -> Result<Restricted> {
    if rule.domain != Domain::Ball {
        return Err(Error::OutOfRange("tube integration needs a ball rule".into()));
    }
    restricted(g, rule, mode, floor, |z| tube_contains(t, z))
}

const CACHE_MAGIC: &[u8; 4] = b"CQR1";
const CACHE_VERSION: u32 = 1;

/// Write a rule in the little-endian binary cache layout.
pub fn write_rule(path: &Path, rule: &QuadRule) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(CACHE_MAGIC);
    buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    buf.push(match rule.domain {
        Domain::Sphere => 0,
        Domain::Ball => 1,
    });
    buf.push(match rule.kind {
        RuleKind::Tensor => 0,
        RuleKind::MonteCarlo => 1,
        RuleKind::QuasiMc => 2,
    });
    buf.extend_from_slice(&(rule.n as u32).to_le_bytes());
    buf.extend_from_slice(&rule.level.to_le_bytes());
    buf.extend_from_slice(&rule.seed.to_le_bytes());
    buf.extend_from_slice(&rule.n_batches.to_le_bytes());
    buf.extend_from_slice(&rule.est_error.to_le_bytes());
    buf.extend_from_slice(&(rule.nodes.len() as u64).to_le_bytes());
    for i in 0..rule.nodes.len() {
        buf.extend_from_slice(&rule.batch[i].to_le_bytes());
        buf.extend_from_slice(&rule.weights[i].to_le_bytes());
        for c in rule.nodes[i].coords() {
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let s = self.buf.get(self.pos..self.pos + N).ok_or(Error::Parse { line: 0, msg: "truncated rule cache".into() })?;
        self.pos += N;
        Ok(s.try_into().expect("slice length"))
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take::<1>()?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take()?))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

/// Read a rule written by [`write_rule`].
pub fn read_rule(path: &Path) -> Result<QuadRule> {
    let mut buf = Vec::new();
    std::fs::File::open(path).and_then(|mut f| f.read_to_end(&mut buf)).map_err(|e| Error::io(path, e))?;
    let bad = |msg: &str| Error::Parse { line: 0, msg: msg.to_string() };
    let mut r = Reader { buf: &buf, pos: 0 };
    if &r.take::<4>()? != CACHE_MAGIC {
        return Err(bad("not a rule cache file"));
    }
    if r.u32()? != CACHE_VERSION {
        return Err(bad("unsupported rule cache version"));
    }
    let domain = match r.u8()? {
        0 => Domain::Sphere,
        1 => Domain::Ball,
        _ => return Err(bad("bad domain tag")),
    };
    let kind = match r.u8()? {
        0 => RuleKind::Tensor,
        1 => RuleKind::MonteCarlo,
        2 => RuleKind::QuasiMc,
        _ => return Err(bad("bad kind tag")),
    };
    let n = r.u32()? as usize;
    let level = r.u32()?;
    let seed = r.u64()?;
    let n_batches = r.u16()?;
    let est_error = r.f64()?;
    let count = r.u64()? as usize;
    let mut rule = QuadRule {
        domain,
        n,
        level,
        kind,
        seed,
        nodes: Vec::with_capacity(count),
        weights: Vec::with_capacity(count),
        batch: Vec::with_capacity(count),
        n_batches,
        est_error,
    };
    for _ in 0..count {
        rule.batch.push(r.u16()?);
        rule.weights.push(r.f64()?);
        let mut z = CVec::zeros(n);
        for j in 0..n {
            let re = r.f64()?;
            let im = r.f64()?;
            z.coords_mut()[j] = Complex64::new(re, im);
        }
        rule.nodes.push(z);
    }
    Ok(rule)
}

/// On-disk cache of rules keyed by `(domain, n, level, kind, seed)`.
#[derive(Debug, Clone)]
pub struct RuleCache {
    dir: PathBuf,
}

impl RuleCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        RuleCache { dir: dir.into() }
    }

    fn path(&self, domain: Domain, n: usize, level: u32, seed: u64) -> PathBuf {
        let (d, k) = match (domain, n) {
            (Domain::Sphere, 1) | (Domain::Ball, 1) => (if domain == Domain::Sphere { "sphere" } else { "ball" }, "tensor"),
            (Domain::Sphere, _) => ("sphere", "qmc"),
            (Domain::Ball, _) => ("ball", "qmc"),
        };
        self.dir.join(format!("{d}-n{n}-l{level}-{k}-s{seed}.qr"))
    }

    /// Load the rule if cached, otherwise build and store it.
    pub fn get(&self, domain: Domain, n: usize, level: u32, seed: u64) -> Result<QuadRule> {
        let p = self.path(domain, n, level, seed);
        if p.exists() {
            return read_rule(&p);
        }
        let rule = match domain {
            Domain::Sphere => sphere_rule(n, level, seed)?,
            Domain::Ball => ball_rule(n, level, seed)?,
        };
        std::fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        write_rule(&p, &rule)?;
        Ok(rule)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(_: &CVec) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn circle_characters_vanish() {
        let rule = sphere_rule(1, 1, 0).unwrap();
        assert_eq!(rule.nodes.len(), 64);
        let v = integrate(|z| z[0].powu(3), &rule, Weight::None).unwrap();
        assert!(v.value.norm() <= 1e-14);
    }

    #[test]
    fn sphere_second_moment_within_error() {
        let rule = sphere_rule(2, 1, 7).unwrap();
        let v = integrate(|z| Complex64::new(z[0].norm_sqr(), 0.0), &rule, Weight::None).unwrap();
        assert!((v.value.re - 0.5).abs() <= 3.0 * v.error.max(1e-15), "{v:?}");
    }

    #[test]
    fn weights_are_normalized() {
        for n in 1..4 {
            for rule in [sphere_rule(n, 1, 3).unwrap(), ball_rule(n, 1, 3).unwrap()] {
                let s: f64 = rule.weights.iter().sum();
                assert!((s - 1.0).abs() < 1e-12);
                assert!(rule.weights.iter().all(|&w| w > 0.0));
                let v = integrate(one, &rule, Weight::None).unwrap();
                assert!((v.value.re - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ball_power_weight() {
        let rule = ball_rule(1, 1, 0).unwrap();
        let v = integrate(one, &rule, Weight::Power(1.0)).unwrap();
        assert!((v.value.re - 0.5).abs() < 1e-13);
    }

    #[test]
    fn lambda_guard_rejects_missing_decay() {
        let rule = ball_rule(1, 1, 0).unwrap();
        assert!(matches!(integrate(one, &rule, Weight::Lambda { decay: 0.0 }), Err(Error::LambdaGuard(_))));
    }

    #[test]
    fn full_cap_equals_full_sphere() {
        let rule = sphere_rule(2, 1, 1).unwrap();
        let t = TubeSpec::new(CVec::basis(2, 0), 2.0).unwrap();
        let g = |z: &CVec| Complex64::new(z[1].norm_sqr(), 0.0);
        let c = integrate_cap(g, &t, &rule, RegionMode::Measure, 200).unwrap();
        let f = integrate(g, &rule, Weight::None).unwrap();
        assert!((c.value - f.value).norm() < 1e-12);
        let m = integrate_cap(|_| Complex64::new(3.0, 0.0), &TubeSpec::new(CVec::basis(2, 1), 0.5).unwrap(), &rule, RegionMode::Mean, 200).unwrap();
        assert!((m.value.re - 3.0).abs() < 1e-12);
        let small = TubeSpec::new(CVec::basis(2, 1), 0.01).unwrap();
        assert!(matches!(integrate_cap(one, &small, &rule, RegionMode::Mean, 200), Err(Error::UnderResolved { .. })));
    }

    #[test]
    fn rules_are_deterministic_and_cache_round_trips() {
        let a = sphere_rule(3, 1, 11).unwrap();
        let b = sphere_rule(3, 1, 11).unwrap();
        assert_eq!(a, b);
        let dir = tempfile::tempdir().unwrap();
        let cache = RuleCache::new(dir.path());
        let c1 = cache.get(Domain::Ball, 2, 1, 5).unwrap();
        let c2 = cache.get(Domain::Ball, 2, 1, 5).unwrap();
        assert_eq!(c1, c2);
        assert_eq!(c1, ball_rule(2, 1, 5).unwrap());
    }
}

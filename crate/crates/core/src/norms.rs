//! Campanato, Hardy, Qₚ, Bloch and H^∞ norms as sampled suprema over
//! declared grids, and the regime classifier.
//!
//! The integrals behind each supremum depend on the smoothness index `s`
//! only through a power of the scale, so they are tabulated once per function
//! ([`OscTable`], [`MobiusTable`], [`GreenTable`]) and the norm for any `s`
//! is read off the table.

use crate::error::{Error, Result};
use crate::geom::{green_from_defect, mobius_unchecked, CVec};
use crate::holofun::{Feature, HoloFun};
use crate::quad::adapted::{ball_polar_nodes, sphere_nodes, sphere_rule_adapted, AdaptConfig};
use crate::quad::{integrate, lambda_guard, qmc, QuadRule, Weight};
use crate::special::integrate_gk;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Dimension and smoothness index of `HC^s(B_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    pub n: usize,
    pub s: f64,
}

impl SpaceParams {
    /// Accepts `s ∈ (−1, n/2]`, the range on which `HC^s` is defined.
    pub fn new(n: usize, s: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::OutOfRange("dimension must be positive".into()));
        }
        if !(s > -1.0 && s <= n as f64 / 2.0) {
            return Err(Error::OutOfRange(format!("s = {s} outside (-1, {}]", n as f64 / 2.0)));
        }
        Ok(SpaceParams { n, s })
    }

    /// The Qₚ index `p = 1 − 2s/n`.
    pub fn p(&self) -> f64 {
        1.0 - 2.0 * self.s / self.n as f64
    }

    /// Range of the norm equivalences: `s ∈ (−1/2, n/2]`.
    pub fn require_equivalence_range(&self) -> Result<()> {
        if self.s > -0.5 {
            Ok(())
        } else {
            Err(Error::Hypothesis(format!("s = {} must exceed -1/2", self.s)))
        }
    }

    /// Range of the gradient characterizations: `s ∈ (−1/2, n/2)`.
    pub fn require_gradient_range(&self) -> Result<()> {
        if self.s > -0.5 && self.s < self.n as f64 / 2.0 {
            Ok(())
        } else {
            Err(Error::Hypothesis(format!("s = {} outside (-1/2, {})", self.s, self.n as f64 / 2.0)))
        }
    }
}

/// Classical space that `HC^s` coincides with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Regime {
    /// Analytic Lipschitz space of the given order `−s`.
    Lipschitz(f64),
    Bmoa,
    /// Holomorphic Morrey space.
    Morrey(f64),
    Hardy,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Lipschitz(a) => write!(f, "Lipschitz A_{a}"),
            Regime::Bmoa => write!(f, "BMOA"),
            Regime::Morrey(s) => write!(f, "Morrey HM^{s}"),
            Regime::Hardy => write!(f, "Hardy H2"),
        }
    }
}

/// Classical space that `Qₚ(B_n)` coincides with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QpRegime {
    Constants,
    FractionalScale,
    Bmoa,
    Bloch,
}

impl fmt::Display for QpRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QpRegime::Constants => "constants",
            QpRegime::FractionalScale => "Q_p fractional scale",
            QpRegime::Bmoa => "BMOA",
            QpRegime::Bloch => "Bloch",
        })
    }
}

/// Both classifications of a parameter pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeLabel {
    pub campanato: Regime,
    /// `None` when `p = 1 − 2s/n` is not positive.
    pub qp: Option<QpRegime>,
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.qp {
            Some(q) => write!(f, "{} (Q_p: {q})", self.campanato),
            None => write!(f, "{}", self.campanato),
        }
    }
}

pub fn qp_regime(n: usize, p: f64) -> Result<QpRegime> {
    if !(p > 0.0) || n == 0 {
        return Err(Error::OutOfRange(format!("Q_p index p = {p} must be positive")));
    }
    let nf = n as f64;
    let low = (nf - 1.0) / nf;
    Ok(if p <= low {
        QpRegime::Constants
    } else if p < 1.0 {
        QpRegime::FractionalScale
    } else if p == 1.0 {
        QpRegime::Bmoa
    } else if n == 1 || p < nf / (nf - 1.0) {
        QpRegime::Bloch
    } else {
        QpRegime::Constants
    })
}

pub fn regime(params: &SpaceParams) -> Result<RegimeLabel> {
    let SpaceParams { n, s } = *params;
    SpaceParams::new(n, s)?;
    let half = n as f64 / 2.0;
    let campanato = if s < 0.0 {
        Regime::Lipschitz(-s)
    } else if s == 0.0 {
        Regime::Bmoa
    } else if s < half {
        Regime::Morrey(s)
    } else {
        Regime::Hardy
    };
    let p = params.p();
    let qp = if p > 0.0 { Some(qp_regime(n, p)?) } else { None };
    Ok(RegimeLabel { campanato, qp })
}

/// Shape of a sampled-supremum grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub centers: usize,
    pub radii: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub random: usize,
}

impl GridSpec {
    pub fn default_for(n: usize) -> Self {
        GridSpec { centers: if n == 1 { 64 } else { 256 }, radii: 12, r_min: 0.02, r_max: 1.0, random: 64 }
    }

    /// A grid containing this one: twice the centers and random points, and
    /// the log-spaced radii with midpoints inserted.
    pub fn doubled(&self) -> Self {
        GridSpec { centers: 2 * self.centers, radii: 2 * self.radii - 1, random: 2 * self.random, ..*self }
    }
}

/// Cap centers, radii and interior points over which suprema are sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupGrid {
    pub n: usize,
    pub centers: Vec<CVec>,
    pub radii: Vec<f64>,
    pub a_samples: Vec<CVec>,
    /// For `a = (1 − r)ζ_i`, the index `i`; `None` for random points.
    pub a_centers: Vec<Option<usize>>,
    pub seed: u64,
}

/// Quasi-uniform points on `S_n`; the first `k` points of a longer list are
/// the list for `k` (equispaced on the circle when the count doubles).
pub fn boundary_points(n: usize, count: usize) -> Vec<CVec> {
    if n == 1 {
        return (0..count)
            .map(|k| CVec::new([Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / count as f64)]))
            .collect();
    }
    let d = qmc::sphere_cube_dim(n);
    qmc::kronecker_points(d, count, &vec![0.5; d]).iter().map(|u| qmc::cube_to_sphere(n, u)).collect()
}

/// `count` log-spaced radii from `r_min` to `r_max`.
pub fn log_radii(count: usize, r_min: f64, r_max: f64) -> Vec<f64> {
    if count <= 1 {
        return vec![r_max];
    }
    let (a, b) = (r_min.ln(), r_max.ln());
    (0..count).map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp()).collect()
}

impl SupGrid {
    pub fn new(n: usize, centers: Vec<CVec>, radii: Vec<f64>, a_samples: Vec<CVec>, seed: u64) -> Result<Self> {
        let a_centers = vec![None; a_samples.len()];
        let g = SupGrid { n, centers, radii, a_samples, a_centers, seed };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        if self.centers.is_empty() || self.radii.is_empty() {
            return Err(Error::OutOfRange("grid needs at least one center and one radius".into()));
        }
        for w in self.radii.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::OutOfRange("grid radii must increase".into()));
            }
        }
        if let Some(&r) = self.radii.iter().find(|&&r| !(r > 0.0 && r <= 2.0)) {
            return Err(Error::BadRadius(r));
        }
        for c in &self.centers {
            if c.dim() != self.n {
                return Err(Error::DimensionMismatch { expected: self.n, got: c.dim() });
            }
            if (c.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::NotOnSphere { norm: c.norm() });
            }
        }
        for a in &self.a_samples {
            if !a.is_interior() {
                return Err(Error::NotInterior { norm: a.norm() });
            }
        }
        Ok(())
    }

    /// Quasi-uniform centers followed by `extra_centers`, log-spaced radii,
    /// the points `(1 − r)ζ` for every center and radius, and `spec.random`
    /// seeded random interior points.
    pub fn build(n: usize, spec: &GridSpec, extra_centers: &[CVec], seed: u64) -> Result<Self> {
        let mut centers = boundary_points(n, spec.centers);
        centers.extend(extra_centers.iter().map(|c| c.direction()));
        let radii = log_radii(spec.radii, spec.r_min, spec.r_max);
        let mut a_samples = Vec::new();
        let mut a_centers = Vec::new();
        let mut origin = false;
        for (i, c) in centers.iter().enumerate() {
            for &r in &radii {
                if r >= 1.0 {
                    if !origin {
                        a_samples.push(CVec::zeros(n));
                        a_centers.push(Some(i));
                        origin = true;
                    }
                    continue;
                }
                a_samples.push(c.scale(1.0 - r));
                a_centers.push(Some(i));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = qmc::sphere_cube_dim(n);
        for _ in 0..spec.random {
            let u: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let rad = 0.99 * rng.random::<f64>();
            a_samples.push(qmc::cube_to_sphere(n, &u).scale(rad));
            a_centers.push(None);
        }
        let g = SupGrid { n, centers, radii, a_samples, a_centers, seed };
        g.validate()?;
        Ok(g)
    }
}

/// One sampled-supremum result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub name: String,
    pub n: usize,
    pub s: f64,
    /// Seminorm plus Hardy part where the norm has one, else the seminorm.
    pub value: f64,
    pub seminorm: f64,
    pub hardy: f64,
    pub argmax_r: f64,
    pub argmax_index: Option<usize>,
    pub nodes_used: usize,
    pub seed: u64,
}

impl NormReport {
    pub const CSV_HEADER: &'static str = "norm_name,n,s,value,argmax_r,argmax_center_index,nodes_used,seed";

    pub fn csv_row(&self) -> String {
        let idx = self.argmax_index.map(|i| i.to_string()).unwrap_or_default();
        format!("{},{},{},{},{},{},{},{}", self.name, self.n, self.s, self.value, self.argmax_r, idx, self.nodes_used, self.seed)
    }
}

/// `‖f‖_{H²}` as the boundary integral on a sphere rule.
pub fn hardy2_norm(f: &HoloFun, rule: &QuadRule) -> Result<f64> {
    check_dim(f, rule.n)?;
    Ok(integrate(|z| Complex64::new(f.eval(z).norm_sqr(), 0.0), rule, Weight::None)?.value.re.max(0.0).sqrt())
}

/// `(∫|f(rζ)|² dσ)^{1/2}` for each `r`; for holomorphic `f` this increases
/// with `r`.
pub fn hardy2_radial_scan(f: &HoloFun, rule: &QuadRule, radii: &[f64]) -> Result<Vec<f64>> {
    check_dim(f, rule.n)?;
    radii
        .iter()
        .map(|&r| {
            let e = integrate(|z| Complex64::new(f.eval(&z.scale(r)).norm_sqr(), 0.0), rule, Weight::None)?;
            Ok(e.value.re.max(0.0).sqrt())
        })
        .collect()
}

/// `‖f‖_{H²}` on a whole-sphere rule graded toward `features`.
pub fn hardy2_norm_adapted(f: &HoloFun, features: &[Feature], cfg: &AdaptConfig) -> f64 {
    sphere_rule_adapted(f.dim(), features, cfg).iter().map(|(z, w)| w * f.eval(z).norm_sqr()).sum::<f64>().max(0.0).sqrt()
}

fn check_dim(f: &HoloFun, n: usize) -> Result<()> {
    if f.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.dim() });
    }
    Ok(())
}

/// Cap oscillations `∫_Q |f − f_Q|² dσ` of one function over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscTable {
    pub n: usize,
    pub radii: Vec<f64>,
    pub hardy_sq: f64,
    /// `osc[i][k]` for center `i` and radius `k`.
    pub osc: Vec<Vec<f64>>,
    pub nodes: usize,
    pub seed: u64,
}

impl OscTable {
    pub fn compute(f: &HoloFun, grid: &SupGrid, cfg: &AdaptConfig) -> Result<Self> {
        Self::compute_with(f, grid, cfg, &f.features())
    }

    /// As [`OscTable::compute`] with an explicit feature list, so several
    /// functions can share one set of nodes.
    pub fn compute_with(f: &HoloFun, grid: &SupGrid, cfg: &AdaptConfig, features: &[Feature]) -> Result<Self> {
        check_dim(f, grid.n)?;
        let kmax = grid.radii.len();
        let mut nodes = 0;
        let mut osc = Vec::with_capacity(grid.centers.len());
        for c in &grid.centers {
            let f0 = f.eval(c);
            let mut w = vec![0.0; kmax];
            let mut s1 = vec![Complex64::new(0.0, 0.0); kmax];
            let mut s2 = vec![0.0; kmax];
            sphere_nodes(grid.n, c, &grid.radii, features, cfg, |k, xi, wt| {
                let g = f.eval(xi) - f0;
                w[k] += wt;
                s1[k] += g * wt;
                s2[k] += g.norm_sqr() * wt;
                nodes += 1;
            });
            let (mut cw, mut c1, mut c2) = (0.0, Complex64::new(0.0, 0.0), 0.0);
            let mut row = Vec::with_capacity(kmax);
            for k in 0..kmax {
                cw += w[k];
                c1 += s1[k];
                c2 += s2[k];
                row.push(if cw > 0.0 { (c2 - c1.norm_sqr() / cw).max(0.0) } else { 0.0 });
            }
            osc.push(row);
        }
        let hardy_sq = hardy2_norm_adapted(f, features, cfg).powi(2);
        Ok(OscTable { n: grid.n, radii: grid.radii.clone(), hardy_sq, osc, nodes, seed: grid.seed })
    }

    /// The table of `c·f`.
    pub fn scaled(&self, c: f64) -> Self {
        let c2 = c * c;
        OscTable {
            hardy_sq: self.hardy_sq * c2,
            osc: self.osc.iter().map(|r| r.iter().map(|v| v * c2).collect()).collect(),
            radii: self.radii.clone(),
            ..*self
        }
    }

    /// `‖f‖_{H²} + sup (r^{2s−n} ∫_Q |f − f_Q|²)^{1/2}`.
    pub fn norm(&self, s: f64) -> NormReport {
        let e = 2.0 * s - self.n as f64;
        let (mut best, mut arg) = (0.0f64, (0usize, self.radii[0]));
        for (i, row) in self.osc.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                let q = self.radii[k].powf(e) * v;
                if q > best {
                    best = q;
                    arg = (i, self.radii[k]);
                }
            }
        }
        let semi = best.sqrt();
        let hardy = self.hardy_sq.sqrt();
        NormReport {
            name: "campanato_osc".into(),
            n: self.n,
            s,
            value: hardy + semi,
            seminorm: semi,
            hardy,
            argmax_r: arg.1,
            argmax_index: Some(arg.0),
            nodes_used: self.nodes,
            seed: self.seed,
        }
    }
}

pub fn campanato_norm_osc(f: &HoloFun, params: &SpaceParams, grid: &SupGrid, cfg: &AdaptConfig) -> Result<NormReport> {
    Ok(OscTable::compute(f, grid, cfg)?.norm(params.s))
}

/// Features of `f ∘ φ_a`: each boundary point `u` moves to `φ_a(u)` and its
/// length scale is multiplied by the boundary Jacobian factor
/// `(1 − |a|²)/|1 − ⟨u, a⟩|²`.
pub fn map_features(features: &[Feature], a: &CVec) -> Vec<Feature> {
    let da = 1.0 - a.norm_sq();
    let mut out: Vec<Feature> = features
        .iter()
        .map(|f| {
            let den = (Complex64::new(1.0, 0.0) - f.dir.dot(a)).norm_sqr();
            let dir = mobius_unchecked(a, &f.dir).direction();
            Feature { dir, scale: (f.scale * da / den).max(1e-12) }
        })
        .collect();
    // φ_a stretches a neighbourhood of a/|a| of size 1 − |a| over most of the sphere.
    let r = a.norm_sq().sqrt();
    if r > 0.0 {
        out.push(Feature { dir: a.direction(), scale: 1.0 - r });
    }
    out
}

/// Per-point integrals for a supremum over `a`, with the weight `(1−|a|²)^s`
/// applied at read-out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointTable {
    pub name: String,
    pub n: usize,
    /// `1 − |a|²` per sample.
    pub defects: Vec<f64>,
    pub a_centers: Vec<Option<usize>>,
    pub values: Vec<f64>,
    pub hardy_sq: f64,
    pub nodes: usize,
    pub seed: u64,
}

/// `∫ |f∘φ_a − f(a)|² dσ` per sample point.
pub type MobiusTable = PointTable;
/// `∫ |∇̃f|² G(·, a) dλ` per sample point.
pub type GreenTable = PointTable;

impl PointTable {
    pub fn scaled(&self, c: f64) -> Self {
        let c2 = c * c;
        PointTable {
            values: self.values.iter().map(|v| v * c2).collect(),
            hardy_sq: self.hardy_sq * c2,
            ..self.clone()
        }
    }

    /// `sup_a (1 − |a|²)^s · value(a)^{1/2}`, plus the Hardy norm for the total.
    pub fn norm(&self, s: f64) -> NormReport {
        let (mut best, mut arg) = (0.0f64, 0usize);
        for (i, (&d, &v)) in self.defects.iter().zip(&self.values).enumerate() {
            let q = d.powf(s) * v.max(0.0).sqrt();
            if q > best {
                best = q;
                arg = i;
            }
        }
        let hardy = self.hardy_sq.sqrt();
        let r = if self.defects.is_empty() { 0.0 } else { 1.0 - (1.0 - self.defects[arg]).max(0.0).sqrt() };
        NormReport {
            name: self.name.clone(),
            n: self.n,
            s,
            value: hardy + best,
            seminorm: best,
            hardy,
            argmax_r: r,
            argmax_index: self.a_centers.get(arg).copied().flatten(),
            nodes_used: self.nodes,
            seed: self.seed,
        }
    }

    pub fn mobius(f: &HoloFun, grid: &SupGrid, cfg: &AdaptConfig) -> Result<Self> {
        Self::mobius_with(f, grid, cfg, &f.features())
    }

    /// Boundary integrals of `|f(φ_a(ζ)) − f(a)|²` on rules graded toward
    /// the mapped features.
    pub fn mobius_with(f: &HoloFun, grid: &SupGrid, cfg: &AdaptConfig, features: &[Feature]) -> Result<Self> {
        check_dim(f, grid.n)?;
        let mut values = Vec::with_capacity(grid.a_samples.len());
        let mut nodes = 0;
        for a in &grid.a_samples {
            let fa = f.eval(a);
            let rule = sphere_rule_adapted(grid.n, &map_features(features, a), cfg);
            nodes += rule.len();
            values.push(rule.iter().map(|(z, w)| w * (f.eval(&mobius_unchecked(a, z)) - fa).norm_sqr()).sum::<f64>());
        }
        Ok(PointTable {
            name: "campanato_mobius".into(),
            n: grid.n,
            defects: grid.a_samples.iter().map(|a| 1.0 - a.norm_sq()).collect(),
            a_centers: grid.a_centers.clone(),
            values,
            hardy_sq: hardy2_norm_adapted(f, features, cfg).powi(2),
            nodes,
            seed: grid.seed,
        })
    }

    pub fn green(f: &HoloFun, grid: &SupGrid, cfg: &AdaptConfig) -> Result<Self> {
        Self::green_with(f, grid, cfg, &f.features())
    }

    /// `∫ |∇̃f(φ_a(w))|² G(w) dλ(w)` in polar coordinates about the pole of
    /// the Green function, graded toward the mapped features.
    pub fn green_with(f: &HoloFun, grid: &SupGrid, cfg: &AdaptConfig, features: &[Feature]) -> Result<Self> {
        check_dim(f, grid.n)?;
        // |∇̃f|² G vanishes like (1 − |z|²)^{n+1} at the boundary.
        lambda_guard(1.0)?;
        let n = grid.n;
        let mut values = Vec::with_capacity(grid.a_samples.len());
        let mut nodes = 0;
        for a in &grid.a_samples {
            let mapped = map_features(features, a);
            let mut sum = 0.0;
            let mut last_v = f64::NAN;
            let mut kernel = 0.0;
            ball_polar_nodes(n, &mapped, 0.0, n == 1, cfg, |w, v, wt| {
                if v != last_v {
                    last_v = v;
                    kernel = green_from_defect(n, 1.0 - v) * (1.0 - v).powi(-(n as i32 + 1));
                }
                let z = mobius_unchecked(a, w);
                sum += wt * kernel * f.inv_grad_sq(&z);
                nodes += 1;
            });
            values.push(sum);
        }
        Ok(PointTable {
            name: "campanato_green".into(),
            n,
            defects: grid.a_samples.iter().map(|a| 1.0 - a.norm_sq()).collect(),
            a_centers: grid.a_centers.clone(),
            values,
            hardy_sq: hardy2_norm_adapted(f, features, cfg).powi(2),
            nodes,
            seed: grid.seed,
        })
    }
}

pub fn campanato_norm_mobius(f: &HoloFun, params: &SpaceParams, grid: &SupGrid, cfg: &AdaptConfig) -> Result<NormReport> {
    params.require_equivalence_range()?;
    Ok(PointTable::mobius(f, grid, cfg)?.norm(params.s))
}

pub fn campanato_norm_green(f: &HoloFun, params: &SpaceParams, grid: &SupGrid, cfg: &AdaptConfig) -> Result<NormReport> {
    params.require_equivalence_range()?;
    Ok(PointTable::green(f, grid, cfg)?.norm(params.s))
}

/// Bergman radius of the ball excluded around the pole of `G^p`.
pub const QP_EXCLUSION: f64 = 0.05;

/// Result of [`qp_norm`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpReport {
    pub p: f64,
    pub value: f64,
    pub argmax_index: usize,
    /// Upper estimate of the excluded contribution to the squared integral
    /// at the maximizing point.
    pub excluded_bound: f64,
    pub nodes_used: usize,
}

/// `sup_ω (∫ |∇f(z)|² G(z, ω)^p dν(z))^{1/2}` over `omegas`, integrating in
/// `w = φ_ω(z)` outside the Bergman ball of radius [`QP_EXCLUSION`] about `ω`.
pub fn qp_norm(f: &HoloFun, p: f64, omegas: &[CVec], cfg: &AdaptConfig) -> Result<QpReport> {
    if !(p > 0.0) {
        return Err(Error::OutOfRange(format!("Q_p index p = {p} must be positive")));
    }
    let n = f.dim();
    let nf = n as f64;
    if n >= 2 && p >= nf / (nf - 1.0) {
        return Err(Error::Hypothesis(format!("G^p is not integrable for p = {p} >= n/(n-1)")));
    }
    let eps = QP_EXCLUSION.tanh();
    let v_min = eps * eps;
    let pole_mass = integrate_gk(
        |v| Complex64::new(green_from_defect(n, 1.0 - v).powf(p) * nf * v.powf(nf - 1.0), 0.0),
        0.0,
        v_min,
        1e-14,
        1e-10,
        400,
    )
    .value
    .re;
    let feats = f.features();
    let probes = boundary_points(n, 16);
    let (mut best, mut arg, mut excl, mut nodes) = (f64::NEG_INFINITY, 0, 0.0, 0);
    for (i, om) in omegas.iter().enumerate() {
        check_dim(f, om.dim())?;
        let dom = 1.0 - om.norm_sq();
        let jac = |w: &CVec| (dom / (Complex64::new(1.0, 0.0) - w.dot(om)).norm_sqr()).powi(n as i32 + 1);
        let mut mapped = map_features(&feats, om);
        if om.norm() > 0.0 {
            mapped.insert(0, Feature { dir: om.direction(), scale: 1.0 - om.norm() });
        }
        let mut sum = 0.0;
        let mut last_v = f64::NAN;
        let mut gp = 0.0;
        ball_polar_nodes(n, &mapped, v_min, false, cfg, |w, v, wt| {
            if v != last_v {
                last_v = v;
                gp = green_from_defect(n, 1.0 - v).powf(p);
            }
            sum += wt * gp * jac(w) * f.grad(&mobius_unchecked(om, w)).norm_sq();
            nodes += 1;
        });
        let mut peak = f.grad(om).norm_sq() * jac(&CVec::zeros(n));
        for u in &probes {
            let w = u.scale(eps);
            peak = peak.max(f.grad(&mobius_unchecked(om, &w)).norm_sq() * jac(&w));
        }
        if sum > best {
            best = sum;
            arg = i;
            excl = peak * pole_mass;
        }
    }
    if omegas.is_empty() {
        best = 0.0;
    }
    Ok(QpReport { p, value: best.max(0.0).sqrt(), argmax_index: arg, excluded_bound: excl, nodes_used: nodes })
}

/// Directions from [`boundary_points`] scaled to each shell radius.
pub fn shell_samples(n: usize, shells: &[f64], directions: usize) -> Vec<CVec> {
    let dirs = boundary_points(n, directions);
    shells.iter().flat_map(|&r| dirs.iter().map(move |d| d.scale(r))).collect()
}

/// Shell radii `0, 1 − 2^{-k}` (k = 1..=levels) and 1.
pub fn default_shells(levels: u32) -> Vec<f64> {
    let mut v = vec![0.0];
    v.extend((1..=levels).map(|k| 1.0 - 0.5f64.powi(k as i32)));
    v.push(1.0);
    v
}

/// `sup (1 − |z|²)^α |∇f(z)|` over the samples.
pub fn bloch_alpha_norm(f: &HoloFun, alpha: f64, z_samples: &[CVec]) -> f64 {
    z_samples.iter().map(|z| (1.0 - z.norm_sq()).max(0.0).powf(alpha) * f.grad(z).norm()).fold(0.0, f64::max)
}

/// `sup |f(z)|` over the samples.
pub fn hinf_norm(f: &HoloFun, z_samples: &[CVec]) -> f64 {
    z_samples.iter().map(|z| f.eval(z).norm()).fold(0.0, f64::max)
}

/// `|∇f(z)| (1 − |z|²)^{1+s}`.
pub fn gradient_growth(f: &HoloFun, s: f64, z: &CVec) -> f64 {
    f.grad(z).norm() * (1.0 - z.norm_sq()).powf(1.0 + s)
}

/// `sup_z |∇f(z)|(1 − |z|²)^{1+s}` divided by the oscillation seminorm.
/// Gradients ignore constants, so the seminorm is the natural scale; a
/// vanishing seminorm leaves the ratio undefined.
pub fn growth_ratio(f: &HoloFun, params: &SpaceParams, z_samples: &[CVec], seminorm: f64) -> Result<f64> {
    params.require_equivalence_range()?;
    if !(seminorm > 1e-14) {
        return Err(Error::UndefinedRatio("oscillation seminorm vanishes".into()));
    }
    let g = z_samples.iter().map(|z| gradient_growth(f, params.s, z)).fold(0.0, f64::max);
    Ok(g / seminorm)
}

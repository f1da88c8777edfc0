//! Carleson measures: tube constants, the dual kernel form, log-Carleson
//! and tent norms, gradient-induced measures, the `T_{a,b}` operator and the
//! two-kernel integral bound.
//!
//! Discrete measures are summed exactly. A density is integrated once on a
//! feature-graded ball rule and every tube mass is a filtered sum over those
//! shared nodes.

use crate::error::{Error, Result};
use crate::geom::CVec;
use crate::holofun::{frac_deriv, Feature, HoloFun};
use crate::norms::SupGrid;
use crate::quad::adapted::{ball_polar_nodes, ball_polar_nodes_weighted, AdaptConfig};
use crate::special::{gamma_ratio, CompensatedSum};
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

/// Minimum number of shared nodes a density tube must hold to enter a supremum.
pub const DENSITY_TUBE_FLOOR: usize = 64;

/// A real function on the ball with the boundary features of its peaks.
#[derive(Clone)]
pub struct RealFun {
    pub n: usize,
    pub label: String,
    pub eval: Arc<dyn Fn(&CVec) -> f64 + Send + Sync>,
    pub features: Vec<Feature>,
}

impl RealFun {
    pub fn new(n: usize, label: impl Into<String>, features: Vec<Feature>, eval: impl Fn(&CVec) -> f64 + Send + Sync + 'static) -> Self {
        RealFun { n, label: label.into(), eval: Arc::new(eval), features }
    }

    pub fn call(&self, z: &CVec) -> f64 {
        (self.eval)(z)
    }
}

impl fmt::Debug for RealFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealFun").field("n", &self.n).field("label", &self.label).field("features", &self.features.len()).finish()
    }
}

/// A positive measure on the ball.
#[derive(Clone, Debug)]
pub enum MeasureSpec {
    /// `Σ w_k δ_{a_k}`.
    Discrete { n: usize, atoms: Vec<(f64, CVec)> },
    /// `g dν`.
    Density(RealFun),
}

impl MeasureSpec {
    pub fn discrete(n: usize, atoms: Vec<(f64, CVec)>) -> Result<Self> {
        for (w, a) in &atoms {
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::OutOfRange(format!("mass {w} must be finite and non-negative")));
            }
            if a.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: a.dim() });
            }
            if !a.is_interior() {
                return Err(Error::NotInterior { norm: a.norm() });
            }
        }
        Ok(MeasureSpec::Discrete { n, atoms })
    }

    pub fn point_mass(w: f64, a: CVec) -> Result<Self> {
        Self::discrete(a.dim(), vec![(w, a)])
    }

    pub fn zero(n: usize) -> Self {
        MeasureSpec::Discrete { n, atoms: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        match self {
            MeasureSpec::Discrete { n, .. } => *n,
            MeasureSpec::Density(g) => g.n,
        }
    }

    /// `c·μ` for `c ≥ 0`.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            MeasureSpec::Discrete { n, atoms } => {
                MeasureSpec::Discrete { n: *n, atoms: atoms.iter().map(|(w, a)| (w * c, a.clone())).collect() }
            }
            MeasureSpec::Density(g) => {
                let inner = g.eval.clone();
                MeasureSpec::Density(RealFun::new(g.n, format!("{}*{c}", g.label), g.features.clone(), move |z| c * inner(z)))
            }
        }
    }

    /// `|f|² μ`.
    pub fn weighted_by(&self, f: &HoloFun) -> Result<Self> {
        if f.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: f.dim() });
        }
        Ok(match self {
            MeasureSpec::Discrete { n, atoms } => {
                MeasureSpec::Discrete { n: *n, atoms: atoms.iter().map(|(w, a)| (w * f.eval(a).norm_sqr(), a.clone())).collect() }
            }
            MeasureSpec::Density(g) => {
                let inner = g.eval.clone();
                let h = f.clone();
                let mut features = g.features.clone();
                features.extend(f.features());
                MeasureSpec::Density(RealFun::new(g.n, format!("|f|^2*{}", g.label), features, move |z| inner(z) * h.eval(z).norm_sqr()))
            }
        })
    }

    /// Masses and locations: the atoms themselves, or the density on the
    /// shared graded rule.
    pub fn nodes(&self, cfg: &AdaptConfig) -> Vec<(f64, CVec)> {
        match self {
            MeasureSpec::Discrete { atoms, .. } => atoms.clone(),
            MeasureSpec::Density(g) => {
                let mut out = Vec::new();
                ball_polar_nodes(g.n, &g.features, 0.0, false, cfg, |z, _, w| {
                    let m = w * g.call(z);
                    out.push((m, z.clone()));
                });
                out
            }
        }
    }

    pub fn total_mass(&self, cfg: &AdaptConfig) -> f64 {
        let mut s = CompensatedSum::default();
        for (w, _) in self.nodes(cfg) {
            s.add(w);
        }
        s.value()
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, MeasureSpec::Discrete { .. })
    }

    /// One line per atom: `w re(a_1) im(a_1) ... re(a_n) im(a_n)`.
    pub fn to_text(&self) -> Result<String> {
        let MeasureSpec::Discrete { atoms, .. } = self else {
            return Err(Error::Unsupported("only discrete measures have a text form".into()));
        };
        let mut s = String::new();
        for (w, a) in atoms {
            s.push_str(&format!("{w:e}"));
            for c in a.coords() {
                s.push_str(&format!(" {:e} {:e}", c.re, c.im));
            }
            s.push('\n');
        }
        Ok(s)
    }

    pub fn from_text(n: usize, text: &str) -> Result<Self> {
        let mut atoms = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let xs: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() }))
                .collect::<Result<_>>()?;
            if xs.len() != 1 + 2 * n {
                return Err(Error::Parse { line: i + 1, msg: format!("expected {} numbers, got {}", 1 + 2 * n, xs.len()) });
            }
            let a = CVec::new((0..n).map(|k| Complex64::new(xs[1 + 2 * k], xs[2 + 2 * k])));
            atoms.push((xs[0], a));
        }
        Self::discrete(n, atoms)
    }
}

/// A sampled supremum over tubes.
#[derive(Debug, Clone, PartialEq)]
pub struct CmReport {
    pub value: f64,
    pub argmax_r: f64,
    pub argmax_center: usize,
    /// Tubes left out for holding fewer than [`DENSITY_TUBE_FLOOR`] nodes.
    pub under_resolved: usize,
}

impl CmReport {
    pub const CSV_HEADER: &'static str = "measure_id,p,constant,argmax_r,argmax_center_index";

    pub fn csv_row(&self, measure_id: &str, p: f64) -> String {
        format!("{measure_id},{p},{:.12e},{:.6e},{}", self.value, self.argmax_r, self.argmax_center)
    }
}

/// Tube masses `μ(Q_r(ζ))` over the center × radius grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TubeTable {
    pub n: usize,
    pub radii: Vec<f64>,
    pub mass: Vec<Vec<f64>>,
    pub counts: Vec<Vec<usize>>,
    pub exact: bool,
    pub nodes: usize,
}

impl TubeTable {
    pub fn compute(mu: &MeasureSpec, grid: &SupGrid, cfg: &AdaptConfig) -> Result<Self> {
        Self::from_nodes(mu.dim(), &mu.nodes(cfg), mu.is_discrete(), grid)
    }

    fn from_nodes(n: usize, nodes: &[(f64, CVec)], exact: bool, grid: &SupGrid) -> Result<Self> {
        if grid.n != n {
            return Err(Error::DimensionMismatch { expected: grid.n, got: n });
        }
        let kmax = grid.radii.len();
        let mut mass = Vec::with_capacity(grid.centers.len());
        let mut counts = Vec::with_capacity(grid.centers.len());
        let one = Complex64::new(1.0, 0.0);
        for c in &grid.centers {
            let mut bucket = vec![CompensatedSum::default(); kmax];
            let mut cnt = vec![0usize; kmax];
            for (w, z) in nodes {
                let d = (one - z.dot(c)).norm();
                let k = grid.radii.partition_point(|&r| r <= d);
                if k < kmax {
                    bucket[k].add(*w);
                    cnt[k] += 1;
                }
            }
            let mut acc = CompensatedSum::default();
            let mut run = 0usize;
            let mut row = Vec::with_capacity(kmax);
            let mut crow = Vec::with_capacity(kmax);
            for k in 0..kmax {
                acc.add(bucket[k].value());
                run += cnt[k];
                row.push(acc.value());
                crow.push(run);
            }
            mass.push(row);
            counts.push(crow);
        }
        Ok(TubeTable { n, radii: grid.radii.clone(), mass, counts, exact, nodes: nodes.len() })
    }

    /// `sup (μ(Q_r(ζ)) / weight(r))^{1/2}`.
    pub fn sup_with<W: Fn(f64) -> f64>(&self, weight: W) -> Result<CmReport> {
        let mut best = CmReport { value: 0.0, argmax_r: self.radii.first().copied().unwrap_or(0.0), argmax_center: 0, under_resolved: 0 };
        let mut seen = 0usize;
        let mut best_sq = 0.0f64;
        for (i, row) in self.mass.iter().enumerate() {
            for (k, &m) in row.iter().enumerate() {
                if !self.exact && self.counts[i][k] < DENSITY_TUBE_FLOOR {
                    best.under_resolved += 1;
                    continue;
                }
                seen += 1;
                let q = m / weight(self.radii[k]);
                if q > best_sq {
                    best_sq = q;
                    best.argmax_r = self.radii[k];
                    best.argmax_center = i;
                }
            }
        }
        if seen == 0 && !self.mass.is_empty() && !self.radii.is_empty() {
            let used = self.counts.iter().flatten().copied().max().unwrap_or(0);
            return Err(Error::UnderResolved { used, floor: DENSITY_TUBE_FLOOR });
        }
        best.value = best_sq.max(0.0).sqrt();
        Ok(best)
    }

    /// `‖μ‖_{CM_p}` on the grid.
    pub fn cm(&self, p: f64) -> Result<CmReport> {
        check_p(p)?;
        let e = self.n as f64 * p;
        self.sup_with(|r| r.powf(e))
    }

    /// `‖μ‖_{LCM_1}` on the grid.
    pub fn log_cm(&self) -> Result<CmReport> {
        let nf = self.n as f64;
        self.sup_with(|r| r.powf(nf) * (2.0 / r).ln().powi(-2))
    }

    /// The table restricted to radii below `delta`.
    pub fn below(&self, delta: f64) -> TubeTable {
        let k = self.radii.partition_point(|&r| r < delta);
        TubeTable {
            radii: self.radii[..k].to_vec(),
            mass: self.mass.iter().map(|r| r[..k].to_vec()).collect(),
            counts: self.counts.iter().map(|r| r[..k].to_vec()).collect(),
            ..*self
        }
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::OutOfRange(format!("Carleson exponent p = {p} must be positive")));
    }
    Ok(())
}

/// `sup_{Q_r(ζ)} (μ(Q_r(ζ)) / r^{np})^{1/2}` over the grid tubes.
pub fn cm_constant(mu: &MeasureSpec, p: f64, grid: &SupGrid, cfg: &AdaptConfig) -> Result<CmReport> {
    check_p(p)?;
    TubeTable::compute(mu, grid, cfg)?.cm(p)
}

/// `sup (μ(Q_r(ζ)) (log(2/r))² / rⁿ)^{1/2}` over the grid tubes.
pub fn log_cm_constant(mu: &MeasureSpec, grid: &SupGrid, cfg: &AdaptConfig) -> Result<CmReport> {
    TubeTable::compute(mu, grid, cfg)?.log_cm()
}

fn dual_kernel(n: usize, p: f64, q: f64, z: &CVec, w: &CVec) -> f64 {
    let nf = n as f64;
    let d = 1.0 - z.norm_sq();
    let den = (Complex64::new(1.0, 0.0) - z.dot(w)).norm();
    d.powf(nf * q) / den.powf(nf * (p + q))
}

fn dual_integral(mu: &MeasureSpec, p: f64, q: f64, z: &CVec, cfg: &AdaptConfig) -> f64 {
    let n = mu.dim();
    let mut s = CompensatedSum::default();
    match mu {
        MeasureSpec::Discrete { atoms, .. } => {
            for (w, a) in atoms {
                s.add(w * dual_kernel(n, p, q, z, a));
            }
        }
        MeasureSpec::Density(g) => {
            let mut feats = g.features.clone();
            let r = z.norm();
            if r > 0.0 {
                feats.push(Feature { dir: z.direction(), scale: 1.0 - r });
            }
            ball_polar_nodes(n, &feats, 0.0, false, cfg, |w, _, wt| {
                s.add(wt * g.call(w) * dual_kernel(n, p, q, z, w));
            });
        }
    }
    s.value()
}

/// Sampled dual form, rooted:
/// `(sup_z ∫ (1−|z|²)^{nq} / |1−⟨z,ω⟩|^{n(p+q)} dμ(ω))^{1/2}` with the argmax index.
pub fn cm_dual_constant(mu: &MeasureSpec, p: f64, q: f64, z_samples: &[CVec], cfg: &AdaptConfig) -> Result<(f64, usize)> {
    check_p(p)?;
    check_p(q)?;
    let mut best = (0.0f64, 0usize);
    for (i, z) in z_samples.iter().enumerate() {
        if z.dim() != mu.dim() {
            return Err(Error::DimensionMismatch { expected: mu.dim(), got: z.dim() });
        }
        let v = dual_integral(mu, p, q, z, cfg);
        if v > best.0 {
            best = (v, i);
        }
    }
    Ok((best.0.sqrt(), best.1))
}

/// Dual form of a discrete measure maximized along each ray `ρ a_k/|a_k|`
/// by a scan in `ρ` followed by golden-section refinement; rooted.
pub fn cm_dual_line_search(mu: &MeasureSpec, p: f64, q: f64) -> Result<f64> {
    check_p(p)?;
    check_p(q)?;
    let MeasureSpec::Discrete { n, atoms } = mu else {
        return Err(Error::Unsupported("line search needs a discrete measure".into()));
    };
    let cfg = AdaptConfig::for_level(1);
    let mut best = dual_integral(mu, p, q, &CVec::zeros(*n), &cfg);
    let to_rho = |x: f64| 1.0 - (-x).exp();
    for (_, a) in atoms {
        if a.norm() == 0.0 {
            continue;
        }
        let u = a.direction();
        let val = |x: f64| dual_integral(mu, p, q, &u.scale(to_rho(x)), &cfg);
        // x = −ln(1−ρ) spreads the scan toward the boundary.
        let steps = 400;
        let xmax = 30.0;
        let (mut bi, mut bv) = (0usize, f64::MIN);
        for i in 0..=steps {
            let v = val(xmax * i as f64 / steps as f64);
            if v > bv {
                bv = v;
                bi = i;
            }
        }
        let h = xmax / steps as f64;
        let (mut lo, mut hi) = ((bi as f64 - 1.0).max(0.0) * h, (bi as f64 + 1.0).min(steps as f64) * h);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut x1, mut x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
        let (mut f1, mut f2) = (val(x1), val(x2));
        for _ in 0..80 {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = val(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = val(x1);
            }
        }
        best = best.max(bv).max(f1).max(f2);
    }
    Ok(best.sqrt())
}

fn check_tent_range(n: usize, s: f64) -> Result<()> {
    let nf = n as f64;
    if !(s > -0.5 && s < nf / 2.0) {
        return Err(Error::OutOfRange(format!("s = {s} outside (-1/2, {}) for tent norms", nf / 2.0)));
    }
    Ok(())
}

/// `sup (r^{2s−n} ∫_{Q_r(ζ)} |f|² dμ)^{1/2}` over the grid tubes.
pub fn tent_norm(f: &HoloFun, s: f64, mu: &MeasureSpec, grid: &SupGrid, cfg: &AdaptConfig) -> Result<CmReport> {
    check_tent_range(mu.dim(), s)?;
    let weighted = mu.weighted_by(f)?;
    cm_constant(&weighted, 1.0 - 2.0 * s / mu.dim() as f64, grid, cfg)
}

/// Densities built from derivatives of `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradientKind {
    /// `|∇̃f|² (1−|z|²)^{−1}`.
    InvGrad,
    /// `|∇f|² (1−|z|²)`.
    Grad,
    /// `|Rf|² (1−|z|²)`.
    Radial,
    /// `Σ_{i<j} |T_{ij} f|²`.
    TangentialSum,
    /// `|R^{α,t}(f − f(0))|² (1−|z|²)^{2t−1}`.
    Frac { alpha: f64, t: f64 },
}

impl fmt::Display for GradientKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GradientKind::InvGrad => write!(f, "inv_grad"),
            GradientKind::Grad => write!(f, "grad"),
            GradientKind::Radial => write!(f, "radial"),
            GradientKind::TangentialSum => write!(f, "tangential_sum"),
            GradientKind::Frac { alpha, t } => write!(f, "frac({alpha},{t})"),
        }
    }
}

/// The measure `g_kind(f) dν`, whose `CM_{1−2s/n}` membership characterizes
/// the Campanato space. `s` is only range-checked.
pub fn gradient_measure(f: &HoloFun, kind: GradientKind, s: f64) -> Result<MeasureSpec> {
    let n = f.dim();
    let nf = n as f64;
    let label = format!("{kind}");
    let features = f.features();
    let h = f.clone();
    let g = match kind {
        GradientKind::Frac { alpha, t } => {
            if !(s > -0.5 && s < 0.5) {
                return Err(Error::OutOfRange(format!("s = {s} outside (-1/2, 1/2) for the fractional measure")));
            }
            if !(t > 0.0f64.max(-s)) {
                return Err(Error::Hypothesis(format!("t = {t} must exceed max(0, -s) = {}", 0.0f64.max(-s))));
            }
            let f0 = f.eval(&CVec::zeros(n));
            let d = frac_deriv(&f.add(&HoloFun::constant(n, -f0)).simplify(), alpha, t)?;
            let e = 2.0 * t - 1.0;
            RealFun::new(n, label, features, move |z| d.eval(z).norm_sqr() * (1.0 - z.norm_sq()).powf(e))
        }
        _ => {
            if !(s > -0.5 && s < nf / 2.0) {
                return Err(Error::OutOfRange(format!("s = {s} outside (-1/2, {}) for gradient measures", nf / 2.0)));
            }
            match kind {
                GradientKind::InvGrad => RealFun::new(n, label, features, move |z| h.jet(z).inv_grad_sq(z) / (1.0 - z.norm_sq())),
                GradientKind::Grad => RealFun::new(n, label, features, move |z| h.jet(z).grad_sq() * (1.0 - z.norm_sq())),
                GradientKind::Radial => RealFun::new(n, label, features, move |z| h.jet(z).radial(z).norm_sqr() * (1.0 - z.norm_sq())),
                GradientKind::TangentialSum => {
                    if n == 1 {
                        return Err(Error::NoTangentialDirections);
                    }
                    RealFun::new(n, label, features, move |z| h.jet(z).tangential_sq_sum(z))
                }
                GradientKind::Frac { .. } => unreachable!(),
            }
        }
    };
    Ok(MeasureSpec::Density(g))
}

/// Parameters of `T_{a,b}` together with the exponents `p, η` of the
/// measures it is applied to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabParams {
    pub p: f64,
    pub eta: f64,
    pub a: f64,
    pub b: f64,
}

impl TabParams {
    /// Validates `p, η ∈ (0, (n+1)/n)`, `a > max(−(1+η)/2, −(1+η+n(1−p))/2)`
    /// and `b > (1+η)/2`.
    pub fn new(n: usize, p: f64, eta: f64, a: f64, b: f64) -> Result<Self> {
        let nf = n as f64;
        let top = (nf + 1.0) / nf;
        if !(p > 0.0 && p < top) {
            return Err(Error::Hypothesis(format!("p = {p} outside (0, {top})")));
        }
        if !(eta > 0.0 && eta < top) {
            return Err(Error::Hypothesis(format!("eta = {eta} outside (0, {top})")));
        }
        let amin = (-(1.0 + eta) / 2.0).max(-(1.0 + eta + nf * (1.0 - p)) / 2.0);
        if !(a > amin) {
            return Err(Error::Hypothesis(format!("a = {a} must exceed {amin}")));
        }
        let bmin = (1.0 + eta) / 2.0;
        if !(b > bmin) {
            return Err(Error::Hypothesis(format!("b = {b} must exceed {bmin}")));
        }
        Ok(TabParams { p, eta, a, b })
    }
}

/// `T_{a,b} f(z) = ∫ (1−|ω|²)^{b−1} / |1−⟨z,ω⟩|^{n+a+b} f(ω) dν(ω)`, evaluated
/// pointwise by ball quadrature graded toward `z/|z|` and the features of `f`.
pub fn tab_operator(f: &RealFun, params: &TabParams, cfg: &AdaptConfig) -> RealFun {
    let n = f.n;
    let (a, b) = (params.a, params.b);
    let e = n as f64 + a + b;
    let inner = f.clone();
    let cfg = *cfg;
    RealFun::new(n, format!("T[{}]", f.label), f.features.clone(), move |z| {
        let mut feats = inner.features.clone();
        let r = z.norm();
        if r > 0.0 {
            feats.push(Feature { dir: z.direction(), scale: 1.0 - r });
        }
        let mut s = CompensatedSum::default();
        ball_polar_nodes(n, &feats, 0.0, false, &cfg, |w, v, wt| {
            let den = (Complex64::new(1.0, 0.0) - z.dot(w)).norm();
            s.add(wt * (1.0 - v).powf(b - 1.0) / den.powf(e) * inner.call(w));
        });
        s.value()
    })
}

/// Input and output Carleson constants of `T_{a,b}` on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TabReport {
    pub cm_in: f64,
    pub cm_out: f64,
    pub ratio: f64,
}

/// `‖|Tf|²(1−|z|²)^{2a+η}dν‖_{CM_p} / ‖|f|²(1−|z|²)^η dν‖_{CM_p}`.
pub fn tab_preservation(f: &RealFun, params: &TabParams, grid: &SupGrid, cfg: &AdaptConfig) -> Result<TabReport> {
    let n = f.n;
    let eta = params.eta;
    let fin = f.clone();
    let mu_in = MeasureSpec::Density(RealFun::new(n, "in", f.features.clone(), move |z| {
        fin.call(z).powi(2) * (1.0 - z.norm_sq()).powf(eta)
    }));
    let t = tab_operator(f, params, cfg);
    let e = 2.0 * params.a + eta;
    let mu_out = MeasureSpec::Density(RealFun::new(n, "out", f.features.clone(), move |z| {
        t.call(z).powi(2) * (1.0 - z.norm_sq()).powf(e)
    }));
    let cm_in = cm_constant(&mu_in, params.p, grid, cfg)?.value;
    let cm_out = cm_constant(&mu_out, params.p, grid, cfg)?.value;
    if cm_in <= 0.0 {
        return Err(Error::UndefinedRatio("input measure has zero Carleson constant".into()));
    }
    Ok(TabReport { cm_in, cm_out, ratio: cm_out / cm_in })
}

/// Which bound applies to `∫ (1−|ζ|²)^s / (|1−⟨z,ζ⟩|^r |1−⟨ω,ζ⟩|^t) dν(ζ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrCase {
    /// `r−s, t−s < n+1`: `|1−⟨ω,z⟩|^{s+n+1−r−t}`.
    BothBelow,
    /// `t−s < n+1 < r−s`: `(1−|z|²)^{s+n+1−r} / |1−⟨ω,z⟩|^t`.
    RAbove,
    /// `r−s < n+1 < t−s`, the mirror of [`FrCase::RAbove`].
    TAbove,
    /// `r−s, t−s > n+1`: the sum of both one-sided bounds.
    BothAbove,
}

impl fmt::Display for FrCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FrCase::BothBelow => "both_below",
            FrCase::RAbove => "r_above",
            FrCase::TAbove => "t_above",
            FrCase::BothAbove => "both_above",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrResult {
    pub case: FrCase,
    pub lhs: f64,
    pub rhs_bound: f64,
    pub ratio: f64,
}

/// Classify `(s, r, t)`; rejects parameters outside the admissible set or
/// within `1e−9` of a case boundary.
pub fn fr_case(n: usize, s: f64, r: f64, t: f64) -> Result<FrCase> {
    let n1 = n as f64 + 1.0;
    if !(s > -1.0) || r < 0.0 || t < 0.0 || !(r + t - s > n1) {
        return Err(Error::Hypothesis(format!("need s > -1, r,t >= 0, r+t-s > n+1 (s={s}, r={r}, t={t})")));
    }
    let (dr, dt) = (r - s - n1, t - s - n1);
    if dr.abs() < 1e-9 || dt.abs() < 1e-9 {
        return Err(Error::AmbiguousCase(format!("r-s-(n+1) = {dr:e}, t-s-(n+1) = {dt:e}")));
    }
    Ok(match (dr > 0.0, dt > 0.0) {
        (false, false) => FrCase::BothBelow,
        (true, false) => FrCase::RAbove,
        (false, true) => FrCase::TAbove,
        (true, true) => FrCase::BothAbove,
    })
}

/// Right-hand side of the two-kernel bound for the given case.
pub fn fr_bound(case: FrCase, n: usize, s: f64, r: f64, t: f64, z: &CVec, w: &CVec) -> f64 {
    let n1 = n as f64 + 1.0;
    let d = (Complex64::new(1.0, 0.0) - w.dot(z)).norm();
    let one_z = || (1.0 - z.norm_sq()).powf(s + n1 - r) / d.powf(t);
    let one_w = || (1.0 - w.norm_sq()).powf(s + n1 - t) / d.powf(r);
    match case {
        FrCase::BothBelow => d.powf(s + n1 - r - t),
        FrCase::RAbove => one_z(),
        FrCase::TAbove => one_w(),
        FrCase::BothAbove => one_z() + one_w(),
    }
}

/// Left side by graded ball quadrature, the matching bound, and their ratio.
pub fn forelli_rudin_check(s: f64, r: f64, t: f64, z: &CVec, w: &CVec, cfg: &AdaptConfig) -> Result<FrResult> {
    let n = z.dim();
    if w.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: w.dim() });
    }
    for p in [z, w] {
        if !p.is_interior() {
            return Err(Error::NotInterior { norm: p.norm() });
        }
    }
    let case = fr_case(n, s, r, t)?;
    let mut feats = Vec::new();
    for p in [z, w] {
        let m = p.norm();
        if m > 0.0 {
            feats.push(Feature { dir: p.direction(), scale: 1.0 - m });
        }
    }
    let one = Complex64::new(1.0, 0.0);
    let mut acc = CompensatedSum::default();
    ball_polar_nodes_weighted(n, &feats, s, cfg, |x, _, wt| {
        let kz = (one - z.dot(x)).norm().powf(r);
        let kw = (one - w.dot(x)).norm().powf(t);
        acc.add(wt / (kz * kw));
    });
    let lhs = acc.value();
    let rhs = fr_bound(case, n, s, r, t, z, w);
    Ok(FrResult { case, lhs, rhs_bound: rhs, ratio: lhs / rhs })
}

/// `∫ (1−|ζ|²)^s dν = n! Γ(s+1) / Γ(n+s+1)`.
pub fn radial_weight_mass(n: usize, s: f64) -> f64 {
    let nf = n as f64;
    gamma_ratio(nf + 1.0, s + 1.0, nf + s + 1.0, 1.0)
}

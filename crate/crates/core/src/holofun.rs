//! Holomorphic functions on the ball represented as finite sums of
//! monomials `c z^m` and rational atoms `c (1 − ⟨z, a⟩)^{−b}`, with the
//! derivative operators that act on them.

use crate::error::{Error, Result};
use crate::geom::CVec;
use crate::special::{binomial_series_coeff, gamma_ratio, is_gamma_pole, ln_multinomial};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Atom centers must satisfy `|a| ≤ 1 − ATOM_MARGIN`.
pub const ATOM_MARGIN: f64 = 1e-9;
/// Default cap on the number of monomials an expansion may produce.
pub const DEFAULT_TERM_LIMIT: usize = 200_000;
/// Tail bound required when a mismatched atom is expanded.
pub const EXPANSION_TAIL: f64 = 1e-10;

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// A multi-index `m = (m_1, ..., m_n)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub SmallVec<[u32; 4]>);

impl MultiIndex {
    pub fn new(entries: impl IntoIterator<Item = u32>) -> Self {
        MultiIndex(entries.into_iter().collect())
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(SmallVec::from_elem(0, n))
    }

    pub fn unit(n: usize, k: usize) -> Self {
        let mut m = Self::zero(n);
        m.0[k] = 1;
        m
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    /// `m!` as a float.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&k| (1..=k).map(f64::from).product::<f64>()).product()
    }

    pub fn add(&self, o: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(o.0.iter()).map(|(a, b)| a + b).collect())
    }

    /// `z^m`.
    pub fn monomial(&self, z: &CVec) -> Complex64 {
        self.0.iter().zip(z.coords()).fold(ONE, |acc, (&k, &zj)| acc * zj.powu(k))
    }
}

/// All multi-indices of length `n` and degree `k`, in lexicographic order
/// (largest first entry first).
pub fn multi_indices(n: usize, k: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        let n = cur.len();
        if pos == n - 1 {
            cur[pos] = left;
            out.push(MultiIndex::new(cur.iter().copied()));
            return;
        }
        for v in (0..=left).rev() {
            cur[pos] = v;
            rec(pos + 1, left - v, cur, out);
        }
    }
    if n > 0 {
        rec(0, k, &mut cur, &mut out);
    }
    out
}

/// Number of monomials of degree `k` in `n` variables.
pub fn count_indices(n: usize, k: usize) -> f64 {
    gamma_ratio((k + n) as f64, 1.0, (k + 1) as f64, n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub coeff: Complex64,
    pub index: MultiIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomTerm {
    pub coeff: Complex64,
    pub center: CVec,
    pub exponent: f64,
}

/// A point of strong variation near the sphere: unit direction and length
/// scale. Adapted quadrature grades its panels toward these.
#[derive(Debug, Clone)]
pub struct Feature {
    pub dir: CVec,
    pub scale: f64,
}

/// Value and complex gradient at a point.
#[derive(Debug, Clone)]
pub struct Jet {
    pub value: Complex64,
    pub grad: SmallVec<[Complex64; 4]>,
}

impl Jet {
    pub fn grad_sq(&self) -> f64 {
        self.grad.iter().map(|g| g.norm_sqr()).sum()
    }

    /// `Rf = Σ z_k ∂_k f`.
    pub fn radial(&self, z: &CVec) -> Complex64 {
        self.grad.iter().zip(z.coords()).map(|(g, zk)| g * zk).sum()
    }

    /// `|∇̃f|² = (1−|z|²)(|∇f|² − |Rf|²)`, evaluated through the Lagrange
    /// identity `|∇f|²|z|² − |Rf|² = Σ_{i<j} |z_i conj(∂_j f) − z_j conj(∂_i f)|²` so the
    /// result is non-negative without cancellation.
    pub fn inv_grad_sq(&self, z: &CVec) -> f64 {
        let d = 1.0 - z.norm_sq();
        let zc = z.coords();
        let mut cross = 0.0;
        for i in 0..zc.len() {
            for j in (i + 1)..zc.len() {
                cross += (zc[i] * self.grad[j].conj() - zc[j] * self.grad[i].conj()).norm_sqr();
            }
        }
        d * (d * self.grad_sq() + cross)
    }

    /// `T_{ij} f = conj(z_j) ∂_i f − conj(z_i) ∂_j f`.
    pub fn tangential(&self, z: &CVec, i: usize, j: usize) -> Complex64 {
        z[j].conj() * self.grad[i] - z[i].conj() * self.grad[j]
    }

    /// `Σ_{i<j} |T_{ij} f|²`.
    pub fn tangential_sq_sum(&self, z: &CVec) -> f64 {
        let n = z.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += self.tangential(z, i, j).norm_sqr();
            }
        }
        s
    }
}

/// `base^{−b}` with the principal branch (`Re base > 0` on the closed ball).
#[inline]
pub fn neg_power(base: Complex64, b: f64) -> Complex64 {
    if b == b.round() && (0.0..=64.0).contains(&b) {
        base.inv().powi(b as i32)
    } else {
        (base.ln() * (-b)).exp()
    }
}

/// A finite sum of monomials and atoms in `n` variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoloFun {
    n: usize,
    poly: Vec<PolyTerm>,
    atoms: Vec<AtomTerm>,
}

impl HoloFun {
    pub fn zero(n: usize) -> Self {
        HoloFun { n, poly: Vec::new(), atoms: Vec::new() }
    }

    pub fn constant(n: usize, c: Complex64) -> Self {
        let mut f = Self::zero(n);
        f.push_poly(c, MultiIndex::zero(n));
        f
    }

    pub fn monomial(c: Complex64, index: MultiIndex) -> Self {
        let mut f = Self::zero(index.dim());
        f.push_poly(c, index);
        f
    }

    /// `c (1 − ⟨z, a⟩)^{−b}`.
    pub fn atom(c: Complex64, center: CVec, b: f64) -> Result<Self> {
        let mut f = Self::zero(center.dim());
        f.push_atom(c, center, b)?;
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn poly_terms(&self) -> &[PolyTerm] {
        &self.poly
    }

    pub fn atom_terms(&self) -> &[AtomTerm] {
        &self.atoms
    }

    pub fn is_polynomial(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn push_poly(&mut self, coeff: Complex64, index: MultiIndex) {
        assert_eq!(index.dim(), self.n, "multi-index dimension");
        self.poly.push(PolyTerm { coeff, index });
    }

    pub fn push_atom(&mut self, coeff: Complex64, center: CVec, b: f64) -> Result<()> {
        if center.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: center.dim() });
        }
        if center.norm() > 1.0 - ATOM_MARGIN {
            return Err(Error::NotInterior { norm: center.norm() });
        }
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::OutOfRange(format!("atom exponent {b} must be positive")));
        }
        self.atoms.push(AtomTerm { coeff, center, exponent: b });
        Ok(())
    }

    /// `self + other`, concatenating term lists.
    pub fn add(&self, other: &HoloFun) -> HoloFun {
        assert_eq!(self.n, other.n, "dimension");
        let mut f = self.clone();
        f.poly.extend(other.poly.iter().cloned());
        f.atoms.extend(other.atoms.iter().cloned());
        f
    }

    pub fn scale(&self, c: Complex64) -> HoloFun {
        let mut f = self.clone();
        f.poly.iter_mut().for_each(|t| t.coeff *= c);
        f.atoms.iter_mut().for_each(|t| t.coeff *= c);
        f
    }

    /// Merge equal monomials and drop exact zeros; atoms are kept as is.
    pub fn simplify(&self) -> HoloFun {
        let mut map: BTreeMap<MultiIndex, Complex64> = BTreeMap::new();
        for t in &self.poly {
            *map.entry(t.index.clone()).or_insert(ZERO) += t.coeff;
        }
        let poly = map
            .into_iter()
            .filter(|(_, c)| *c != ZERO)
            .map(|(index, coeff)| PolyTerm { coeff, index })
            .collect();
        HoloFun { n: self.n, poly, atoms: self.atoms.clone() }
    }

    fn max_degree(&self) -> u32 {
        self.poly.iter().flat_map(|t| t.index.0.iter().copied()).max().unwrap_or(0)
    }

    /// `f(z)`.
    pub fn eval(&self, z: &CVec) -> Complex64 {
        debug_assert_eq!(z.dim(), self.n);
        let mut s = ZERO;
        if !self.poly.is_empty() {
            let pw = PowerTable::new(z, self.max_degree());
            for t in &self.poly {
                s += t.coeff * pw.monomial(&t.index);
            }
        }
        for a in &self.atoms {
            s += a.coeff * neg_power(ONE - z.dot(&a.center), a.exponent);
        }
        s
    }

    /// Value and complex gradient.
    pub fn jet(&self, z: &CVec) -> Jet {
        debug_assert_eq!(z.dim(), self.n);
        let n = self.n;
        let mut value = ZERO;
        let mut grad: SmallVec<[Complex64; 4]> = SmallVec::from_elem(ZERO, n);
        if !self.poly.is_empty() {
            let pw = PowerTable::new(z, self.max_degree());
            for t in &self.poly {
                let m = &t.index.0;
                value += t.coeff * pw.monomial(&t.index);
                for k in 0..n {
                    if m[k] == 0 {
                        continue;
                    }
                    let mut p = t.coeff * f64::from(m[k]);
                    for j in 0..n {
                        let e = if j == k { m[j] - 1 } else { m[j] };
                        p *= pw.get(j, e);
                    }
                    grad[k] += p;
                }
            }
        }
        for a in &self.atoms {
            let base = ONE - z.dot(&a.center);
            let v = a.coeff * neg_power(base, a.exponent);
            value += v;
            let dv = v * a.exponent / base;
            for k in 0..n {
                grad[k] += dv * a.center[k].conj();
            }
        }
        Jet { value, grad }
    }

    /// `∇f(z)`.
    pub fn grad(&self, z: &CVec) -> CVec {
        CVec::new(self.jet(z).grad)
    }

    /// `Rf(z) = Σ z_k ∂f/∂z_k`.
    pub fn radial(&self, z: &CVec) -> Complex64 {
        self.jet(z).radial(z)
    }

    /// `|∇̃f(z)|²` for `|z| < 1`.
    pub fn inv_grad_sq(&self, z: &CVec) -> f64 {
        self.jet(z).inv_grad_sq(z)
    }

    /// `T_{ij} f(z)` for `i < j` (0-based).
    pub fn tangential(&self, z: &CVec, i: usize, j: usize) -> Result<Complex64> {
        if self.n < 2 {
            return Err(Error::NoTangentialDirections);
        }
        if !(i < j && j < self.n) {
            return Err(Error::OutOfRange(format!("tangential indices ({i}, {j})")));
        }
        Ok(self.jet(z).tangential(z, i, j))
    }

    /// `∂f/∂z_k` as a function in the same representation.
    pub fn partial(&self, k: usize) -> HoloFun {
        let mut out = HoloFun::zero(self.n);
        for t in &self.poly {
            let m = t.index.0[k];
            if m > 0 {
                let mut idx = t.index.clone();
                idx.0[k] -= 1;
                out.poly.push(PolyTerm { coeff: t.coeff * f64::from(m), index: idx });
            }
        }
        for a in &self.atoms {
            let c = a.coeff * a.exponent * a.center[k].conj();
            if c != ZERO {
                out.atoms.push(AtomTerm { coeff: c, center: a.center.clone(), exponent: a.exponent + 1.0 });
            }
        }
        out
    }

    /// Taylor coefficient of `z^m` at the origin.
    pub fn taylor_coeff(&self, m: &MultiIndex) -> Complex64 {
        let mut s = ZERO;
        for t in &self.poly {
            if &t.index == m {
                s += t.coeff;
            }
        }
        let k = m.degree() as usize;
        for a in &self.atoms {
            let abar = a.center.conj();
            let mono = m.monomial(&abar);
            if mono == ZERO {
                continue;
            }
            // (b)_k / k! · k!/m! · ā^m
            let c = binomial_series_coeff(a.exponent, k) * (ln_multinomial(&m.0)).exp();
            s += a.coeff * c * mono;
        }
        s
    }

    /// Boundary features of the atom terms: directions `a/|a|` with scale
    /// `1 − |a|`, for atoms with `|a| > 0.5`.
    pub fn features(&self) -> Vec<Feature> {
        let mut out: Vec<Feature> = Vec::new();
        for a in &self.atoms {
            let r = a.center.norm();
            if r > 0.5 {
                let dir = a.center.direction();
                let scale = 1.0 - r;
                if let Some(f) = out.iter_mut().find(|f| f.dir.max_abs_diff(&dir) < 1e-12) {
                    f.scale = f.scale.min(scale);
                } else {
                    out.push(Feature { dir, scale });
                }
            }
        }
        out
    }

    /// Exact `H²` norm from the orthogonality of homogeneous parts.
    pub fn h2_norm_exact(&self) -> f64 {
        let n = self.n;
        let simple = self.simplify();
        let mut s = 0.0;
        for t in &simple.poly {
            s += t.coeff.norm_sqr() * monomial_h2_sq(n, &t.index);
        }
        for t in &simple.poly {
            for a in &simple.atoms {
                let c = simple_atom_taylor(a, &t.index);
                s += 2.0 * (t.coeff * c.conj()).re * monomial_h2_sq(n, &t.index);
            }
        }
        for a1 in &simple.atoms {
            for a2 in &simple.atoms {
                s += atom_h2_inner(n, a1, a2).re;
            }
        }
        s.max(0.0).sqrt()
    }

    /// Serialize as structured text. Floats are written in shortest
    /// round-trip form, so parsing restores them bit-exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "holofun {}", self.n);
        for t in &self.poly {
            let _ = write!(out, "poly {} {}", t.coeff.re, t.coeff.im);
            for m in t.index.entries() {
                let _ = write!(out, " {m}");
            }
            out.push('\n');
        }
        for a in &self.atoms {
            let _ = write!(out, "atom {} {}", a.coeff.re, a.coeff.im);
            for c in a.center.coords() {
                let _ = write!(out, " {} {}", c.re, c.im);
            }
            let _ = writeln!(out, " {}", a.exponent);
        }
        out
    }

    pub fn from_text(s: &str) -> Result<HoloFun> {
        let mut f: Option<HoloFun> = None;
        for (ln, line) in s.lines().enumerate() {
            let line_no = ln + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| Error::Parse { line: line_no, msg: msg.to_string() };
            let mut parts = line.split_whitespace();
            let tag = parts.next().unwrap_or_default();
            let rest: Vec<&str> = parts.collect();
            match tag {
                "holofun" => {
                    let n: usize = rest.first().and_then(|v| v.parse().ok()).ok_or_else(|| err("bad dimension"))?;
                    f = Some(HoloFun::zero(n));
                }
                "poly" | "atom" => {
                    let g = f.as_mut().ok_or_else(|| err("term before header"))?;
                    let n = g.n;
                    let nums: Vec<f64> = rest
                        .iter()
                        .map(|v| v.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| err("bad number"))?;
                    if tag == "poly" {
                        if nums.len() != 2 + n {
                            return Err(err("poly row needs re im m_1..m_n"));
                        }
                        let idx = nums[2..]
                            .iter()
                            .map(|&v| if v >= 0.0 && v == v.floor() { Ok(v as u32) } else { Err(err("bad index")) })
                            .collect::<Result<Vec<u32>>>()?;
                        g.push_poly(Complex64::new(nums[0], nums[1]), MultiIndex::new(idx));
                    } else {
                        if nums.len() != 3 + 2 * n {
                            return Err(err("atom row needs re im a-coords b"));
                        }
                        let center = CVec::new((0..n).map(|j| Complex64::new(nums[2 + 2 * j], nums[3 + 2 * j])));
                        g.push_atom(Complex64::new(nums[0], nums[1]), center, nums[2 + 2 * n])
                            .map_err(|e| err(&e.to_string()))?;
                    }
                }
                _ => return Err(err("unknown row tag")),
            }
        }
        f.ok_or(Error::Parse { line: 0, msg: "missing header".into() })
    }
}

struct PowerTable {
    stride: usize,
    table: SmallVec<[Complex64; 48]>,
}

impl PowerTable {
    fn new(z: &CVec, max_deg: u32) -> Self {
        let stride = max_deg as usize + 1;
        let mut table = SmallVec::with_capacity(stride * z.dim());
        for zj in z.coords() {
            let mut p = ONE;
            for _ in 0..stride {
                table.push(p);
                p *= zj;
            }
        }
        PowerTable { stride, table }
    }

    #[inline]
    fn get(&self, j: usize, e: u32) -> Complex64 {
        self.table[j * self.stride + e as usize]
    }

    #[inline]
    fn monomial(&self, m: &MultiIndex) -> Complex64 {
        m.0.iter().enumerate().fold(ONE, |acc, (j, &e)| acc * self.get(j, e))
    }
}

/// `‖z^m‖²_{H²} = (n−1)! m! / (n−1+|m|)!`.
pub fn monomial_h2_sq(n: usize, m: &MultiIndex) -> f64 {
    let k = m.degree() as f64;
    let nf = n as f64;
    let log = libm::lgamma(nf) + m.0.iter().map(|&e| libm::lgamma(f64::from(e) + 1.0)).sum::<f64>()
        - libm::lgamma(nf + k);
    log.exp()
}

fn simple_atom_taylor(a: &AtomTerm, m: &MultiIndex) -> Complex64 {
    let mono = m.monomial(&a.center.conj());
    if mono == ZERO {
        return ZERO;
    }
    a.coeff * binomial_series_coeff(a.exponent, m.degree() as usize) * ln_multinomial(&m.0).exp() * mono
}

fn atom_h2_inner(n: usize, a1: &AtomTerm, a2: &AtomTerm) -> Complex64 {
    // Σ_k (b1)_k (b2)_k / (k!)² · (n−1)! k!/(n−1+k)! · ⟨a2, a1⟩^k
    let x = a2.center.dot(&a1.center);
    let nf = n as f64;
    let mut coef = 1.0; // (b1)_k (b2)_k /(k!)² · (n−1)!k!/(n−1+k)!
    let mut pw = ONE;
    let mut s = ZERO;
    for k in 0..200_000usize {
        let kf = k as f64;
        let term = pw * coef;
        s += term;
        if k > 10 && term.norm() < 1e-18 * s.norm().max(1e-300) {
            break;
        }
        coef *= (a1.exponent + kf) * (a2.exponent + kf) / ((kf + 1.0) * (nf + kf));
        pw *= x;
    }
    a1.coeff * a2.coeff.conj() * s
}

/// The multiplier applied to the degree-`k` homogeneous part by `R^{α,t}`.
pub fn frac_multiplier(n: usize, alpha: f64, t: f64, k: usize) -> f64 {
    let n1 = n as f64 + 1.0 + alpha;
    gamma_ratio(n1, n1 + k as f64 + t, n1 + t, n1 + k as f64)
}

fn check_frac_hypothesis(n: usize, alpha: f64, t: f64) -> Result<()> {
    let nf = n as f64;
    for (label, v) in [("n+α", nf + alpha), ("n+α+t", nf + alpha + t)] {
        if v < 0.0 && v == v.floor() {
            return Err(Error::Hypothesis(format!("{label} = {v} is a negative integer")));
        }
    }
    if is_gamma_pole(nf + 1.0 + alpha) || is_gamma_pole(nf + 1.0 + alpha + t) {
        return Err(Error::Hypothesis("Γ pole in the multiplier".into()));
    }
    Ok(())
}

/// Truncated homogeneous expansion of a function with certified tail.
#[derive(Debug, Clone)]
pub struct Expansion {
    pub fun: HoloFun,
    /// Upper bound on the sup-norm over the closed ball of what was dropped.
    pub tail_bound: f64,
    pub degree: usize,
}

/// Tail `Σ_{k>K} |c| m_k (b)_k/k! |a|^k` bounded by `t_{K+1}/(1−ρ)` where ρ
/// dominates every later term ratio. `mult_ratio(k)` bounds `m_{k+1}/m_k`
/// from above for all indices ≥ k and `mult(k)` is `|m_k|`.
fn atom_tail(
    a: &AtomTerm,
    k_cut: usize,
    mult: &dyn Fn(usize) -> f64,
    mult_ratio: &dyn Fn(usize) -> f64,
) -> f64 {
    let r = a.center.norm();
    if r == 0.0 {
        return 0.0;
    }
    let b = a.exponent;
    let k1 = k_cut + 1;
    let t_next = a.coeff.norm() * binomial_series_coeff(b, k1) * r.powi(k1 as i32) * mult(k1);
    let series_ratio = ((k1 as f64 + b) / (k1 as f64 + 1.0)).max(1.0);
    let rho = r * series_ratio * mult_ratio(k1).max(1.0);
    if rho >= 1.0 {
        return f64::INFINITY;
    }
    t_next / (1.0 - rho)
}

fn expand_atom_into(
    a: &AtomTerm,
    k_cut: usize,
    mult: &dyn Fn(usize) -> f64,
    map: &mut BTreeMap<MultiIndex, Complex64>,
) {
    let n = a.center.dim();
    let abar = a.center.conj();
    let logs: Vec<f64> = abar.coords().iter().map(|c| c.norm().ln()).collect();
    let phases: Vec<Complex64> =
        abar.coords().iter().map(|c| if c.norm() > 0.0 { c / c.norm() } else { ZERO }).collect();
    for k in 0..=k_cut {
        let ck = binomial_series_coeff(a.exponent, k) * mult(k);
        for m in multi_indices(n, k as u32) {
            let mut log = ln_multinomial(&m.0);
            let mut phase = ONE;
            let mut zero = false;
            for j in 0..n {
                let e = m.0[j];
                if e > 0 {
                    if phases[j] == ZERO {
                        zero = true;
                        break;
                    }
                    log += f64::from(e) * logs[j];
                    phase *= phases[j].powu(e);
                }
            }
            if zero {
                continue;
            }
            let c = a.coeff * ck * log.exp() * phase;
            *map.entry(m).or_insert(ZERO) += c;
        }
    }
}

/// Expand every atom of `f` through degree `k_cut`; polynomial terms pass
/// through. Fails if the expansion would exceed `term_limit` monomials.
pub fn homogeneous_expand(f: &HoloFun, k_cut: usize, term_limit: usize) -> Result<Expansion> {
    let one = |_: usize| 1.0;
    let one_ratio = |_: usize| 1.0;
    expand_with(f, k_cut, term_limit, &one, &one_ratio)
}

fn expand_with(
    f: &HoloFun,
    k_cut: usize,
    term_limit: usize,
    mult: &dyn Fn(usize) -> f64,
    mult_ratio: &dyn Fn(usize) -> f64,
) -> Result<Expansion> {
    let n = f.n;
    let terms: f64 = if f.atoms.is_empty() { 0.0 } else { (0..=k_cut).map(|k| count_indices(n, k)).sum() };
    if terms > term_limit as f64 {
        return Err(Error::ExpansionTooLarge { terms: terms as usize, limit: term_limit });
    }
    let mut map: BTreeMap<MultiIndex, Complex64> = BTreeMap::new();
    let mut tail = 0.0;
    for a in &f.atoms {
        expand_atom_into(a, k_cut, mult, &mut map);
        tail += atom_tail(a, k_cut, mult, mult_ratio);
    }
    let mut out = HoloFun::zero(n);
    for t in &f.poly {
        out.poly.push(PolyTerm { coeff: t.coeff * mult(t.index.degree() as usize), index: t.index.clone() });
    }
    for (index, coeff) in map {
        out.poly.push(PolyTerm { coeff, index });
    }
    Ok(Expansion { fun: out.simplify(), tail_bound: tail, degree: k_cut })
}

/// Smallest cutoff whose certified tail is below `target`, or an error when
/// none exists below `k_max`.
fn choose_cutoff(
    f: &HoloFun,
    target: f64,
    k_max: usize,
    mult: &dyn Fn(usize) -> f64,
    mult_ratio: &dyn Fn(usize) -> f64,
) -> Result<usize> {
    let mut k = 0;
    loop {
        let tail: f64 = f.atoms.iter().map(|a| atom_tail(a, k, mult, mult_ratio)).sum();
        if tail < target {
            return Ok(k);
        }
        if k >= k_max {
            let radius = f.atoms.iter().map(|a| a.center.norm()).fold(0.0, f64::max);
            return Err(Error::TailUnachievable { bound: tail, target, radius });
        }
        k += if k < 64 { 1 } else { 8 };
    }
}

/// Fractional radial derivative `R^{α,t} f` with the tail bound of any
/// truncated expansion it needed (zero when exact).
pub fn frac_deriv_certified(f: &HoloFun, alpha: f64, t: f64) -> Result<(HoloFun, f64)> {
    frac_apply(f, alpha, t, false)
}

/// `R^{α,t} f`.
pub fn frac_deriv(f: &HoloFun, alpha: f64, t: f64) -> Result<HoloFun> {
    frac_deriv_certified(f, alpha, t).map(|p| p.0)
}

/// `R_{α,t} f`, the inverse of `R^{α,t}`, with its tail bound.
pub fn frac_inv_certified(f: &HoloFun, alpha: f64, t: f64) -> Result<(HoloFun, f64)> {
    frac_apply(f, alpha, t, true)
}

/// `R_{α,t} f`.
pub fn frac_inv(f: &HoloFun, alpha: f64, t: f64) -> Result<HoloFun> {
    frac_inv_certified(f, alpha, t).map(|p| p.0)
}

fn frac_apply(f: &HoloFun, alpha: f64, t: f64, inverse: bool) -> Result<(HoloFun, f64)> {
    let n = f.n;
    check_frac_hypothesis(n, alpha, t)?;
    if t == 0.0 {
        return Ok((f.clone(), 0.0));
    }
    let n1 = n as f64 + 1.0 + alpha;
    let mult = move |k: usize| {
        let m = frac_multiplier(n, alpha, t, k);
        if inverse {
            1.0 / m
        } else {
            m
        }
    };
    // m_{k+1}/m_k = (n1+k+t)/(n1+k) for the forward map; reciprocal inverse.
    let ratio = move |k: usize| {
        let kf = k as f64;
        if n1 + kf <= 0.0 || n1 + kf + t <= 0.0 {
            return f64::INFINITY;
        }
        let r = (n1 + kf + t) / (n1 + kf);
        if inverse {
            1.0 / r
        } else {
            r
        }
    };
    let (from_b, to_b) = if inverse { (n1 + t, n1) } else { (n1, n1 + t) };
    let mut out = HoloFun::zero(n);
    for p in &f.poly {
        out.poly.push(PolyTerm { coeff: p.coeff * mult(p.index.degree() as usize), index: p.index.clone() });
    }
    let mut rest = HoloFun::zero(n);
    for a in &f.atoms {
        if (a.exponent - from_b).abs() < 1e-12 && to_b > 0.0 {
            out.atoms.push(AtomTerm { coeff: a.coeff, center: a.center.clone(), exponent: to_b });
        } else {
            rest.atoms.push(a.clone());
        }
    }
    let mut tail = 0.0;
    if !rest.atoms.is_empty() {
        let k = choose_cutoff(&rest, EXPANSION_TAIL, 20_000, &mult, &ratio)?;
        let e = expand_with(&rest, k, DEFAULT_TERM_LIMIT, &mult, &ratio)?;
        tail = e.tail_bound;
        out.poly.extend(e.fun.poly);
    }
    Ok((out, tail))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        let f = HoloFun::monomial(ONE, MultiIndex::new([2, 0]));
        assert!((f.eval(&CVec::from_reals(&[0.5, 0.0])) - c(0.25, 0.0)).norm() < 1e-15);
        let g = HoloFun::atom(ONE, CVec::from_reals(&[0.5, 0.0]), 1.0).unwrap();
        assert_eq!(g.eval(&CVec::zeros(2)), ONE);
        assert_eq!(HoloFun::zero(3).eval(&CVec::from_reals(&[0.1, 0.2, 0.3])), ZERO);
    }

    #[test]
    fn grad_examples() {
        let f = HoloFun::monomial(ONE, MultiIndex::new([1, 1]));
        let g = f.grad(&CVec::from_reals(&[0.5, 0.5]));
        assert!((g[0] - c(0.5, 0.0)).norm() < 1e-15 && (g[1] - c(0.5, 0.0)).norm() < 1e-15);
        let a = CVec::from_reals(&[0.5]);
        let atom = HoloFun::atom(ONE, a.clone(), 2.0).unwrap();
        let v = atom.grad(&a).norm();
        assert!((v - 2.0 * 0.5 / 0.75f64.powi(3)).abs() < 1e-13);
        assert_eq!(HoloFun::constant(2, c(3.0, 1.0)).grad(&CVec::from_reals(&[0.1, 0.2])).norm(), 0.0);
    }

    #[test]
    fn radial_examples() {
        let f = HoloFun::monomial(ONE, MultiIndex::new([2, 1]));
        assert!((f.radial(&CVec::from_reals(&[0.5, 0.5])) - c(0.375, 0.0)).norm() < 1e-15);
        let atom = HoloFun::atom(ONE, CVec::from_reals(&[0.3, 0.4]), 2.5).unwrap();
        assert_eq!(atom.radial(&CVec::zeros(2)), ZERO);
    }

    #[test]
    fn invariant_gradient_examples() {
        let f = HoloFun::monomial(ONE, MultiIndex::new([1]));
        let z = CVec::new([c(0.36, 0.48)]);
        assert!((f.inv_grad_sq(&z) - 0.4096).abs() < 1e-14);
        let g = HoloFun::monomial(c(0.3, -1.0), MultiIndex::new([1, 0]))
            .add(&HoloFun::atom(ONE, CVec::from_reals(&[0.2, 0.1]), 2.0).unwrap());
        let o = CVec::zeros(2);
        let gs: f64 = g.grad(&o).norm_sq();
        assert!((g.inv_grad_sq(&o) - gs).abs() < 1e-14);
        assert_eq!(HoloFun::constant(2, ONE).inv_grad_sq(&CVec::from_reals(&[0.3, 0.1])), 0.0);
    }

    #[test]
    fn invariant_gradient_matches_displayed_formula() {
        let f = HoloFun::monomial(c(1.0, 0.5), MultiIndex::new([2, 1]))
            .add(&HoloFun::atom(c(0.2, 0.0), CVec::new([c(0.3, 0.2), c(-0.1, 0.4)]), 2.5).unwrap());
        let z = CVec::new([c(0.2, -0.3), c(0.5, 0.1)]);
        let j = f.jet(&z);
        let direct = (1.0 - z.norm_sq()) * (j.grad_sq() - j.radial(&z).norm_sqr());
        assert!((j.inv_grad_sq(&z) - direct).abs() < 1e-13);
    }

    #[test]
    fn tangential_examples() {
        let f = HoloFun::monomial(ONE, MultiIndex::new([1, 0]));
        let t = f.tangential(&CVec::from_reals(&[0.0, 0.5]), 0, 1).unwrap();
        assert!((t - c(0.5, 0.0)).norm() < 1e-15);
        let g = HoloFun::monomial(ONE, MultiIndex::new([1, 1]));
        assert!(g.tangential(&CVec::from_reals(&[0.4, 0.4]), 0, 1).unwrap().norm() < 1e-15);
        let h = HoloFun::monomial(ONE, MultiIndex::new([1]));
        assert!(matches!(h.tangential(&CVec::from_reals(&[0.1]), 0, 1), Err(Error::NoTangentialDirections)));
    }

    #[test]
    fn frac_examples() {
        let f = HoloFun::monomial(ONE, MultiIndex::new([3]))
            .add(&HoloFun::atom(ONE, CVec::from_reals(&[0.3]), 1.7).unwrap());
        assert_eq!(frac_deriv(&f, 0.4, 0.0).unwrap(), f);
        assert!((frac_multiplier(1, 0.0, 1.0, 3) - 2.5).abs() < 1e-13);
        assert!((frac_multiplier(2, 0.3, 0.7, 0) - 1.0).abs() < 1e-14);
        let k = HoloFun::atom(ONE, CVec::from_reals(&[0.4, 0.0]), 3.0).unwrap();
        let d = frac_deriv(&k, 0.0, 0.5).unwrap();
        assert_eq!(d.atom_terms().len(), 1);
        assert_eq!(d.atom_terms()[0].exponent, 3.5);
        assert!(frac_deriv(&k, -3.0, 0.5).is_err());
    }

    #[test]
    fn mismatched_atom_expansion_is_certified() {
        let k = HoloFun::atom(ONE, CVec::new([c(0.3, 0.2), c(0.0, -0.25)]), 1.5).unwrap();
        let (d, tail) = frac_deriv_certified(&k, 0.0, 1.0).unwrap();
        assert!(d.is_polynomial());
        assert!(tail < EXPANSION_TAIL);
        // R^{0,1} on degree k multiplies by (n+1+k)/(n+1): compare to the
        // closed form ((n+1)h + Rh)/(n+1).
        let z = CVec::new([c(0.5, -0.3), c(0.2, 0.6)]);
        let expect = (k.eval(&z) * 3.0 + k.radial(&z)) / 3.0;
        assert!((d.eval(&z) - expect).norm() < 1e-9);
    }

    #[test]
    fn expansion_examples() {
        let atom = HoloFun::atom(ONE, CVec::from_reals(&[0.5]), 1.0).unwrap();
        let e = homogeneous_expand(&atom, 2, 1000).unwrap();
        let mut coeffs: Vec<(u32, Complex64)> =
            e.fun.poly_terms().iter().map(|t| (t.index.degree(), t.coeff)).collect();
        coeffs.sort_by_key(|p| p.0);
        assert_eq!(coeffs.len(), 3);
        for (k, cf) in coeffs {
            assert!((cf - c(0.5f64.powi(k as i32), 0.0)).norm() < 1e-15);
        }
        let e20 = homogeneous_expand(&atom, 20, 1000).unwrap();
        assert!((e20.tail_bound - 2.0 * 0.5f64.powi(21)).abs() < 1e-18);
        let p = HoloFun::monomial(c(2.0, 0.0), MultiIndex::new([4]));
        let ep = homogeneous_expand(&p, 3, 1000).unwrap();
        assert_eq!(ep.tail_bound, 0.0);
        assert_eq!(ep.fun, p);
        let big = HoloFun::atom(ONE, CVec::from_reals(&[0.3, 0.3, 0.3]), 1.0).unwrap();
        assert!(matches!(homogeneous_expand(&big, 200, 1000), Err(Error::ExpansionTooLarge { .. })));
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let f = HoloFun::monomial(c(0.1, -1.0 / 3.0), MultiIndex::new([2, 1]))
            .add(&HoloFun::atom(c(std::f64::consts::PI, 1e-300), CVec::new([c(0.1, 0.2), c(-0.3, 0.0)]), 2.75).unwrap());
        let g = HoloFun::from_text(&f.to_text()).unwrap();
        assert_eq!(f, g);
        assert!(HoloFun::from_text("holofun 2\npoly 1 0 1\n").is_err());
    }

    #[test]
    fn exact_h2_norm_examples() {
        let z1 = HoloFun::monomial(ONE, MultiIndex::new([1, 0]));
        assert!((z1.h2_norm_exact() - 0.5f64.sqrt()).abs() < 1e-15);
        // ‖(1 − z ā)^{-1}‖² = 1/(1 − |a|²) for n = 1
        let k = HoloFun::atom(ONE, CVec::from_reals(&[0.6]), 1.0).unwrap();
        assert!((k.h2_norm_exact().powi(2) - 1.0 / 0.64).abs() < 1e-12);
        // Szegő kernel in n = 2: (1 − ⟨z,a⟩)^{-2} has norm² (1 − |a|²)^{-2}
        let s = HoloFun::atom(ONE, CVec::from_reals(&[0.3, 0.4]), 2.0).unwrap();
        assert!((s.h2_norm_exact().powi(2) - 0.75f64.powi(-2)).abs() < 1e-11);
    }

    #[test]
    fn taylor_coefficients_of_atom() {
        let a = CVec::new([c(0.3, 0.1), c(-0.2, 0.2)]);
        let f = HoloFun::atom(ONE, a.clone(), 2.0).unwrap();
        // coefficient of z1 z2: (b)_2/2! · 2!/(1!1!) · ā1 ā2 = 3 · 2 · ā1 ā2
        let m = MultiIndex::new([1, 1]);
        let expect = 6.0 * a[0].conj() * a[1].conj();
        assert!((f.taylor_coeff(&m) - expect).norm() < 1e-14);
        let e = homogeneous_expand(&f, 2, 100).unwrap();
        let coeff = e.fun.poly_terms().iter().find(|t| t.index == m).unwrap().coeff;
        assert!((coeff - expect).norm() < 1e-14);
    }

    #[test]
    fn multi_index_enumeration() {
        let v = multi_indices(3, 2);
        assert_eq!(v.len(), 6);
        assert_eq!(v[0], MultiIndex::new([2, 0, 0]));
        assert!((count_indices(3, 2) - 6.0).abs() < 1e-12);
    }
}

//! Gleason operators, the Riemann–Stieltjes pair `T_g`, `S_g`, and the
//! identities tying them to multiplication and the radial derivative.

use crate::carleson::{cm_constant, MeasureSpec, RealFun};
use crate::error::{Error, Result};
use crate::geom::CVec;
use crate::holofun::{multi_indices, AtomTerm, Feature, HoloFun, MultiIndex};
use crate::norms::{hinf_norm, SupGrid};
use crate::quad::adapted::AdaptConfig;
use crate::special::{binomial_series_coeff, integrate_gk};
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

/// Absolute tolerance of the `t ∈ [0, 1]` integrals.
pub const PARAM_TOL: f64 = 1e-10;
const PARAM_PANELS: usize = 400;
/// Largest `|∂^γ f(0)|` accepted as zero by [`gleason_decompose`].
pub const VANISHING_TOL: f64 = 1e-12;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

type Integrand = Arc<dyn Fn(&CVec, f64) -> Complex64 + Send + Sync>;
type Closed = Arc<dyn Fn(&CVec) -> Complex64 + Send + Sync>;

/// A pointwise holomorphic function: an exact part plus closed-form terms
/// and an optional integral over `t ∈ [0, 1]`.
#[derive(Clone)]
pub struct Evaluator {
    pub n: usize,
    pub exact: HoloFun,
    closed: Vec<Closed>,
    integrand: Option<Integrand>,
    /// Bound on the absolute error of [`Evaluator::eval`].
    pub tol: f64,
    pub meta: String,
}

impl fmt::Debug for Evaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Evaluator")
            .field("n", &self.n)
            .field("exact_terms", &(self.exact.poly_terms().len() + self.exact.atom_terms().len()))
            .field("closed", &self.closed.len())
            .field("integral", &self.integrand.is_some())
            .field("tol", &self.tol)
            .field("meta", &self.meta)
            .finish()
    }
}

impl Evaluator {
    pub fn exact(f: HoloFun) -> Self {
        Evaluator { n: f.dim(), exact: f, closed: Vec::new(), integrand: None, tol: 0.0, meta: String::new() }
    }

    pub fn is_exact(&self) -> bool {
        self.closed.is_empty() && self.integrand.is_none()
    }

    /// Value and the estimated error of the parameter integral.
    pub fn eval_with_error(&self, z: &CVec) -> (Complex64, f64) {
        let mut v = self.exact.eval(z);
        for c in &self.closed {
            v += c(z);
        }
        let mut err = 0.0;
        if let Some(g) = &self.integrand {
            let r = integrate_gk(|t| g(z, t), 0.0, 1.0, PARAM_TOL, 0.0, PARAM_PANELS);
            v += r.value;
            err = r.error;
        }
        (v, err)
    }

    pub fn eval(&self, z: &CVec) -> Complex64 {
        self.eval_with_error(z).0
    }
}

/// `∏ conj(a_k)^{α_k}`.
fn conj_power(a: &CVec, alpha: &MultiIndex) -> Complex64 {
    alpha.monomial(&a.conj())
}

/// `((1−u)^{−b} − 1)/u`, with the series `b(1 + (b+1)u/2 + …)` near `u = 0`.
pub fn difference_quotient(u: Complex64, b: f64) -> Complex64 {
    if u.norm() < 1e-4 {
        let mut term = Complex64::new(b, 0.0);
        let mut s = term;
        for j in 1..40 {
            term *= u * (b + j as f64) / (j as f64 + 1.0);
            s += term;
            if term.norm() < 1e-18 * s.norm() {
                break;
            }
        }
        s
    } else {
        (crate::holofun::neg_power(ONE - u, b) - ONE) / u
    }
}

/// `A_α` of one monomial: `(m!(|β|−m)!/|β|!) · C(β, α) z^{β−α}`, zero unless `α ≤ β`.
fn gleason_monomial(coeff: Complex64, beta: &MultiIndex, alpha: &MultiIndex) -> Option<(Complex64, MultiIndex)> {
    if beta.entries().iter().zip(alpha.entries()).any(|(b, a)| a > b) {
        return None;
    }
    let m = alpha.degree() as f64;
    let nb = beta.degree() as f64;
    let ln_c = ln_fact(m) + ln_fact(nb - m) - ln_fact(nb)
        + beta.entries().iter().zip(alpha.entries()).map(|(&b, &a)| ln_fact(b as f64) - ln_fact(a as f64) - ln_fact((b - a) as f64)).sum::<f64>();
    let rest = MultiIndex::new(beta.entries().iter().zip(alpha.entries()).map(|(b, a)| b - a));
    Some((coeff * ln_c.exp(), rest))
}

fn ln_fact(x: f64) -> f64 {
    libm::lgamma(x + 1.0)
}

/// `A_α f = (m/α!) ∫₀¹ (1−τ)^{m−1} ∂^α f(τz) dτ`, `m = |α|`.
fn gleason_alpha(f: &HoloFun, alpha: &MultiIndex) -> Evaluator {
    let n = f.dim();
    let m = alpha.degree() as usize;
    let mut exact = HoloFun::zero(n);
    for t in f.poly_terms() {
        if t.index.degree() as usize >= m {
            if let Some((c, idx)) = gleason_monomial(t.coeff, &t.index, alpha) {
                exact.push_poly(c, idx);
            }
        }
    }
    let mut ev = Evaluator::exact(exact.simplify());
    ev.meta = format!("A{:?}", alpha.entries());
    let atoms: Vec<AtomTerm> = f.atom_terms().to_vec();
    if atoms.is_empty() {
        return ev;
    }
    if m == 1 {
        let k = alpha.entries().iter().position(|&e| e == 1).unwrap_or(0);
        for a in atoms {
            let ck = a.coeff * a.center[k].conj();
            let (center, b) = (a.center.clone(), a.exponent);
            ev.closed.push(Arc::new(move |z: &CVec| ck * difference_quotient(z.dot(&center), b)));
        }
        ev.tol = 1e-14;
        return ev;
    }
    // (b)_m ā^α (1 − τ⟨z,a⟩)^{−b−m} times (m/α!)(1−τ)^{m−1}
    let pre = m as f64 / alpha.factorial();
    let fact_m: f64 = (1..=m).map(|j| j as f64).product();
    let terms: Vec<(Complex64, CVec, f64)> = atoms
        .iter()
        .map(|a| (a.coeff * binomial_series_coeff(a.exponent, m) * fact_m * conj_power(&a.center, alpha) * pre, a.center.clone(), a.exponent + m as f64))
        .collect();
    let mm = m as i32;
    ev.integrand = Some(Arc::new(move |z: &CVec, tau: f64| {
        let w = (1.0 - tau).powi(mm - 1);
        let mut s = ZERO;
        for (c, a, e) in &terms {
            s += c * crate::holofun::neg_power(ONE - z.dot(a) * tau, *e);
        }
        s * w
    }));
    ev.tol = PARAM_TOL;
    ev
}

/// `A_k f(z) = ∫₀¹ ∂_k f(tz) dt` for `k` in `1..=n`.
pub fn gleason_first(f: &HoloFun, k: usize) -> Result<Evaluator> {
    let n = f.dim();
    if !(1..=n).contains(&k) {
        return Err(Error::OutOfRange(format!("Gleason index k = {k} outside 1..={n}")));
    }
    Ok(gleason_alpha(f, &MultiIndex::unit(n, k - 1)))
}

/// `f = Σ_{|α|=m} z^α A_α f` for `f` vanishing to order `m` at the origin.
/// First-order operators commute here, so `A_α` collects every ordering of
/// the composition; the recorded order is lexicographic.
pub fn gleason_decompose(f: &HoloFun, m: u32) -> Result<Vec<(MultiIndex, Evaluator)>> {
    let n = f.dim();
    if m == 0 {
        return Err(Error::OutOfRange("decomposition order m must be positive".into()));
    }
    let scale = 1.0f64.max(f.poly_terms().iter().map(|t| t.coeff.norm()).fold(0.0, f64::max)).max(f.atom_terms().iter().map(|t| t.coeff.norm()).fold(0.0, f64::max));
    for k in 0..m {
        for g in multi_indices(n, k) {
            let c = f.taylor_coeff(&g);
            if c.norm() > VANISHING_TOL * scale {
                return Err(Error::Hypothesis(format!("derivative of order {:?} at 0 is {c}, not zero", g.entries())));
            }
        }
    }
    Ok(multi_indices(n, m)
        .into_iter()
        .map(|a| {
            let mut ev = gleason_alpha(f, &a);
            ev.meta = format!("A{:?} order=lex", a.entries());
            (a, ev)
        })
        .collect())
}

/// `max |f(z) − Σ z^α A_α f(z)|` over the probes.
pub fn gleason_residual(f: &HoloFun, parts: &[(MultiIndex, Evaluator)], probes: &[CVec]) -> f64 {
    probes
        .iter()
        .map(|z| {
            let s: Complex64 = parts.iter().map(|(a, e)| a.monomial(z) * e.eval(z)).sum();
            (f.eval(z) - s).norm()
        })
        .fold(0.0, f64::max)
}

/// Exact `T_g f` for polynomials: `z^α, z^β ↦ (|β|/(|α|+|β|)) z^{α+β}`.
fn rs_t_poly(g: &HoloFun, f: &HoloFun) -> HoloFun {
    let mut out = HoloFun::zero(f.dim());
    for tf in f.poly_terms() {
        for tg in g.poly_terms() {
            let db = tg.index.degree();
            if db == 0 {
                continue;
            }
            let w = db as f64 / (tf.index.degree() + db) as f64;
            out.push_poly(tf.coeff * tg.coeff * w, tf.index.add(&tg.index));
        }
    }
    out.simplify()
}

fn check_pair(g: &HoloFun, f: &HoloFun) -> Result<()> {
    if g.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), got: f.dim() });
    }
    Ok(())
}

/// `T_g f(z) = ∫₀¹ f(tz) Rg(tz) dt/t`. The integrand is evaluated as
/// `f(tz) Σ z_k ∂_k g(tz)`, which is regular at `t = 0`.
pub fn rs_t(g: &HoloFun, f: &HoloFun) -> Result<Evaluator> {
    check_pair(g, f)?;
    if g.is_polynomial() && f.is_polynomial() {
        let mut e = Evaluator::exact(rs_t_poly(g, f));
        e.meta = "T_g exact".into();
        return Ok(e);
    }
    let (gg, ff) = (g.clone(), f.clone());
    let mut e = Evaluator::exact(HoloFun::zero(f.dim()));
    e.integrand = Some(Arc::new(move |z: &CVec, t: f64| {
        let x = z.scale(t);
        ff.eval(&x) * gg.jet(&x).radial(z)
    }));
    e.tol = PARAM_TOL;
    e.meta = "T_g quadrature".into();
    Ok(e)
}

/// `S_g f(z) = ∫₀¹ g(tz) Rf(tz) dt/t = T_f g`.
pub fn rs_s(g: &HoloFun, f: &HoloFun) -> Result<Evaluator> {
    let mut e = rs_t(f, g)?;
    e.meta = e.meta.replace("T_g", "S_g");
    Ok(e)
}

/// `max |f g − f(0)g(0) − T_g f − S_g f|` over the probes.
pub fn multiplier_check(g: &HoloFun, f: &HoloFun, probes: &[CVec]) -> Result<f64> {
    let t = rs_t(g, f)?;
    let s = rs_s(g, f)?;
    let o = CVec::zeros(f.dim());
    let c0 = f.eval(&o) * g.eval(&o);
    Ok(probes.iter().map(|z| (f.eval(z) * g.eval(z) - c0 - t.eval(z) - s.eval(z)).norm()).fold(0.0, f64::max))
}

/// `max |R(T_g f) − f Rg|` over the probes, for polynomial inputs.
pub fn rs_radial_identity(g: &HoloFun, f: &HoloFun, probes: &[CVec]) -> Result<f64> {
    check_pair(g, f)?;
    if !(g.is_polynomial() && f.is_polynomial()) {
        return Err(Error::Unsupported("R of a quadrature-backed evaluator".into()));
    }
    let t = rs_t_poly(g, f);
    Ok(probes.iter().map(|z| (t.radial(z) - f.eval(z) * g.radial(z)).norm()).fold(0.0, f64::max))
}

/// `max |T_g f − S_f g|` over the probes.
pub fn symmetry_residual(g: &HoloFun, f: &HoloFun, probes: &[CVec]) -> Result<f64> {
    let t = rs_t(g, f)?;
    let s = rs_s(f, g)?;
    Ok(probes.iter().map(|z| (t.eval(z) - s.eval(z)).norm()).fold(0.0, f64::max))
}

fn radial_measure(n: usize, label: &str, features: Vec<Feature>, rh: impl Fn(&CVec) -> Complex64 + Send + Sync + 'static) -> MeasureSpec {
    MeasureSpec::Density(RealFun::new(n, label, features, move |z| rh(z).norm_sqr() * (1.0 - z.norm_sq())))
}

/// One row of [`sg_continuity_probe`].
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityRow {
    /// `‖S_g f‖ / (‖g‖_∞ ‖f‖)`.
    pub s_ratio: f64,
    /// `‖T_g f‖ / ‖f‖`.
    pub t_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    pub rows: Vec<ContinuityRow>,
    pub max_s_ratio: f64,
    pub max_t_ratio: f64,
    pub hinf_g: f64,
    /// `‖(1−|z|²)|Rg|² dν‖_{CM_1}`.
    pub cm_mu_g: f64,
}

/// Norms through the radial-derivative measure `|Rh|²(1−|z|²)dν` in
/// `CM_{1−2s/n}`, with `R(S_g f) = g Rf` and `R(T_g f) = f Rg` evaluated
/// pointwise.
pub fn sg_continuity_probe(g: &HoloFun, s: f64, family: &[HoloFun], grid: &SupGrid, cfg: &AdaptConfig, hinf_samples: &[CVec]) -> Result<ContinuityReport> {
    let n = g.dim();
    let nf = n as f64;
    if !(s > -0.5 && s < nf / 2.0) {
        return Err(Error::OutOfRange(format!("s = {s} outside (-1/2, {})", nf / 2.0)));
    }
    let p = 1.0 - 2.0 * s / nf;
    let hinf_g = hinf_norm(g, hinf_samples);
    let gg = g.clone();
    let mu_g = radial_measure(n, "mu_g", g.features(), move |z| gg.radial(z));
    let cm_mu_g = cm_constant(&mu_g, 1.0, grid, cfg)?.value;
    let mut rows = Vec::with_capacity(family.len());
    for f in family {
        check_pair(g, f)?;
        let mut feats = f.features();
        feats.extend(g.features());
        let ff = f.clone();
        let base = cm_constant(&radial_measure(n, "f", f.features(), move |z| ff.radial(z)), p, grid, cfg)?.value;
        if base <= 0.0 {
            return Err(Error::UndefinedRatio("test function has zero radial measure".into()));
        }
        let (f1, g1) = (f.clone(), g.clone());
        let sgf = cm_constant(&radial_measure(n, "S_g f", feats.clone(), move |z| g1.eval(z) * f1.radial(z)), p, grid, cfg)?.value;
        let (f2, g2) = (f.clone(), g.clone());
        let tgf = cm_constant(&radial_measure(n, "T_g f", feats, move |z| f2.eval(z) * g2.radial(z)), p, grid, cfg)?.value;
        rows.push(ContinuityRow { s_ratio: sgf / (hinf_g * base), t_ratio: tgf / base });
    }
    let max_s_ratio = rows.iter().map(|r| r.s_ratio).fold(0.0, f64::max);
    let max_t_ratio = rows.iter().map(|r| r.t_ratio).fold(0.0, f64::max);
    Ok(ContinuityReport { rows, max_s_ratio, max_t_ratio, hinf_g, cm_mu_g })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::shell_samples;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn mono(cf: f64, e: &[u32]) -> HoloFun {
        HoloFun::monomial(c(cf), MultiIndex::new(e.iter().copied()))
    }

    fn probes(n: usize) -> Vec<CVec> {
        shell_samples(n, &[0.1, 0.5, 0.9, 0.99], 25)
    }

    #[test]
    fn first_order_on_monomials() {
        let f = mono(1.0, &[2, 1]);
        let a1 = gleason_first(&f, 1).unwrap();
        assert!(a1.is_exact());
        let want = mono(2.0 / 3.0, &[1, 1]);
        for z in probes(2) {
            assert!((a1.eval(&z) - want.eval(&z)).norm() < 1e-15);
        }
        let k = gleason_first(&HoloFun::constant(2, c(3.0)), 2).unwrap();
        assert_eq!(k.eval(&CVec::new([c(0.3), c(0.2)])), c(0.0));
        assert!(gleason_first(&f, 3).is_err());
    }

    #[test]
    fn first_order_on_atoms() {
        let a = CVec::new([Complex64::new(0.5, 0.2), c(-0.4)]);
        let b = 2.5;
        let f = HoloFun::atom(c(1.0), a.clone(), b).unwrap();
        let a2 = gleason_first(&f, 2).unwrap();
        // Limit at the origin: b ā_k.
        assert!((a2.eval(&CVec::zeros(2)) - a[1].conj() * b).norm() < 1e-14);
        // Against direct 1-D quadrature of ∂_2 f(tz).
        for z in probes(2).into_iter().take(30) {
            let d = f.partial(1);
            let q = integrate_gk(|t| d.eval(&z.scale(t)), 0.0, 1.0, 1e-13, 0.0, 2000).value;
            assert!((a2.eval(&z) - q).norm() < 1e-10);
        }
        // The series branch agrees with the closed form just below the switch.
        let u = Complex64::new(6e-5, 7e-5);
        let closed = (crate::holofun::neg_power(c(1.0) - u, b) - c(1.0)) / u;
        assert!((difference_quotient(u, b) - closed).norm() < 1e-10);
    }

    #[test]
    fn decomposition_examples() {
        let f = mono(1.0, &[1, 0]).add(&mono(1.0, &[0, 2]));
        let parts = gleason_decompose(&f, 1).unwrap();
        assert_eq!(gleason_residual(&f, &parts, &probes(2)), 0.0);
        let g = mono(1.0, &[1, 1]);
        let parts = gleason_decompose(&g, 2).unwrap();
        assert!(parts.iter().all(|(_, e)| e.is_exact()));
        assert!(gleason_residual(&g, &parts, &probes(2)) < 1e-15);
        assert!(matches!(gleason_decompose(&f, 2), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn decomposition_of_atoms() {
        let a = CVec::new([Complex64::new(0.6, 0.3), c(0.2)]);
        let fa = HoloFun::atom(c(1.0), a, 2.0).unwrap();
        let f0 = fa.eval(&CVec::zeros(2));
        let f = fa.add(&HoloFun::constant(2, -f0));
        let p1 = gleason_decompose(&f, 1).unwrap();
        assert!(gleason_residual(&f, &p1, &probes(2)) < 1e-8);
        // Order two needs the gradient at 0 removed too.
        let mut g = f.clone();
        for k in 0..2 {
            let e = MultiIndex::unit(2, k);
            g.push_poly(-f.taylor_coeff(&e), e);
        }
        let p2 = gleason_decompose(&g, 2).unwrap();
        assert!(gleason_residual(&g, &p2, &probes(2)) < 1e-8);
    }

    #[test]
    fn riemann_stieltjes_rules() {
        let f = mono(1.0, &[1, 0]);
        let g = mono(1.0, &[0, 2]);
        let t = rs_t(&g, &f).unwrap();
        let want = mono(2.0 / 3.0, &[1, 2]);
        for z in probes(2) {
            assert!((t.eval(&z) - want.eval(&z)).norm() < 1e-15);
        }
        let one = HoloFun::constant(2, c(1.0));
        let h = mono(2.0, &[1, 1]).add(&HoloFun::constant(2, c(0.5)));
        let t1 = rs_t(&h, &one).unwrap();
        let s1 = rs_s(&one, &h).unwrap();
        let o = CVec::zeros(2);
        for z in probes(2) {
            let d = h.eval(&z) - h.eval(&o);
            assert!((t1.eval(&z) - d).norm() < 1e-14);
            assert!((s1.eval(&z) - d).norm() < 1e-14);
        }
        assert!(multiplier_check(&g, &f, &probes(2)).unwrap() < 1e-12);
        assert!(multiplier_check(&one, &f, &probes(2)).unwrap() < 1e-12);
        assert!(rs_radial_identity(&g, &f, &probes(2)).unwrap() < 1e-12);
        assert_eq!(rs_radial_identity(&HoloFun::constant(2, c(2.0)), &f, &probes(2)).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_backed_identities() {
        let a = CVec::new([Complex64::new(0.4, 0.5), c(0.3)]);
        let fa = HoloFun::atom(c(1.0), a, 2.0).unwrap();
        let z1 = mono(1.0, &[1, 0]);
        assert!(multiplier_check(&z1, &fa, &probes(2)).unwrap() < 1e-8);
        assert!(symmetry_residual(&z1, &fa, &probes(2)).unwrap() < 1e-8);
        assert!(rs_radial_identity(&z1, &fa, &probes(2)).is_err());
    }

    #[test]
    fn radial_derivative_of_s_matches_pointwise_identity() {
        let a = CVec::new([c(0.3), Complex64::new(0.0, -0.6)]);
        let f = HoloFun::atom(c(1.0), a, 2.0).unwrap();
        let g = mono(1.0, &[1, 1]).add(&HoloFun::constant(2, c(0.7)));
        let sg = rs_s(&g, &f).unwrap();
        for z in probes(2).into_iter().step_by(5).take(20) {
            // R h(z) = d/dr h(rz) at r = 1, by a centered difference.
            let h = 1e-4;
            let d = (sg.eval(&z.scale(1.0 + h)) - sg.eval(&z.scale(1.0 - h))) / (2.0 * h);
            let want = g.eval(&z) * f.radial(&z);
            assert!((d - want).norm() < 1e-6 * (1.0 + want.norm()), "{d} {want}");
        }
    }
}

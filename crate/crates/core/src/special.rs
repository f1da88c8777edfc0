//! Gamma-function ratios, Gauss–Legendre nodes and adaptive Gauss–Kronrod
//! integration on an interval.

use num_complex::Complex64;
use std::f64::consts::PI;

/// `ln|Γ(x)|` together with the sign of `Γ(x)`.
///
/// Returns `(f64::INFINITY, 1.0)` at the poles `x = 0, -1, -2, ...`.
pub fn ln_gamma_signed(x: f64) -> (f64, f64) {
    if x <= 0.0 && x == x.floor() {
        return (f64::INFINITY, 1.0);
    }
    let (v, s) = libm::lgamma_r(x);
    (v, if s < 0 { -1.0 } else { 1.0 })
}

/// `Γ(a)Γ(b) / (Γ(c)Γ(d))` evaluated through log-gamma differences so that
/// large arguments do not overflow.
pub fn gamma_ratio(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let (la, sa) = ln_gamma_signed(a);
    let (lb, sb) = ln_gamma_signed(b);
    let (lc, sc) = ln_gamma_signed(c);
    let (ld, sd) = ln_gamma_signed(d);
    sa * sb * sc * sd * (la + lb - lc - ld).exp()
}

/// `true` when `x` is a non-positive integer (a pole of Γ).
pub fn is_gamma_pole(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

/// Coefficient of `u^k` in `(1 - u)^{-b}`: `Γ(k+b) / (Γ(b) k!)`.
pub fn binomial_series_coeff(b: f64, k: usize) -> f64 {
    // The direct product is exact enough for the moderate k we use and
    // avoids log-gamma cancellation at small k.
    if k < 64 {
        let mut c = 1.0;
        for j in 0..k {
            c *= (b + j as f64) / (j as f64 + 1.0);
        }
        c
    } else {
        gamma_ratio(k as f64 + b, 1.0, b, k as f64 + 1.0)
    }
}

/// Natural log of the multinomial `k! / (m_1! ... m_n!)`.
pub fn ln_multinomial(m: &[u32]) -> f64 {
    let k: u32 = m.iter().sum();
    let mut v = libm::lgamma(k as f64 + 1.0);
    for &mj in m {
        v -= libm::lgamma(mj as f64 + 1.0);
    }
    v
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "need at least one node");
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(m: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule over the panels delimited by `breaks`
/// (sorted, at least two entries). Nodes are appended to `out` as
/// `(x, weight)` pairs in increasing order.
pub fn composite_gl(breaks: &[f64], m: usize, out: &mut Vec<(f64, f64)>) {
    let (gx, gw) = gl_cached(m);
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, w) in gx.iter().zip(gw.iter()) {
            out.push((mid + half * x, half * w));
        }
    }
}

/// Gauss–Legendre rules for small orders, computed once.
pub fn gl_cached(m: usize) -> (&'static [f64], &'static [f64]) {
    use std::sync::OnceLock;
    const MAX: usize = 64;
    static TABLE: OnceLock<Vec<(Vec<f64>, Vec<f64>)>> = OnceLock::new();
    let table = TABLE.get_or_init(|| (0..=MAX).map(|k| if k == 0 { (vec![], vec![]) } else { gauss_legendre(k) }).collect());
    assert!((1..=MAX).contains(&m), "Gauss-Legendre order {m} outside 1..={MAX}");
    let (x, w) = &table[m];
    (x.as_slice(), w.as_slice())
}

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    (kron * h, ((kron - gauss) * h).norm())
}

/// Result of an adaptive 1-D integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral1d {
    pub value: Complex64,
    pub error: f64,
    pub evaluations: usize,
}

/// Adaptive Gauss–Kronrod (7/15) integration of a complex integrand on
/// `[a, b]`, bisecting the worst panel until the summed error estimate is
/// below `max(abs_tol, rel_tol * |I|)` or `max_panels` is reached.
pub fn integrate_gk<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Integral1d {
    let mut panels: Vec<(f64, f64, Complex64, f64)> = Vec::new();
    let (v, e) = gk15(&mut f, a, b);
    panels.push((a, b, v, e));
    let mut evaluations = 15;
    loop {
        let total: Complex64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.norm()) || panels.len() >= max_panels {
            return Integral1d { value: total, error: err, evaluations };
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (pa, pb, _, _) = panels.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        let (v1, e1) = gk15(&mut f, pa, mid);
        let (v2, e2) = gk15(&mut f, mid, pb);
        evaluations += 30;
        panels.push((pa, mid, v1, e1));
        panels.push((mid, pb, v2, e2));
    }
}

/// Neumaier compensated summation with a fixed accumulation order.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Geometric breakpoints `x ± scale·2^k` clipped to `(lo, hi)`, used to grade
/// composite rules toward a point where the integrand varies on length
/// `scale`.
pub fn graded_breaks(lo: f64, hi: f64, x: f64, scale: f64, out: &mut Vec<f64>) {
    if !(scale > 0.0) || !x.is_finite() {
        return;
    }
    let span = hi - lo;
    let mut d = scale;
    while d < span {
        for p in [x - d, x + d] {
            if p > lo && p < hi {
                out.push(p);
            }
        }
        d *= 2.0;
    }
    if x > lo && x < hi {
        out.push(x);
    }
}

/// Sort, deduplicate (to relative spacing 1e-14) and return breakpoints.
pub fn finish_breaks(mut b: Vec<f64>) -> Vec<f64> {
    b.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
    let mut out: Vec<f64> = Vec::with_capacity(b.len());
    for x in b {
        if let Some(&last) = out.last() {
            if x - last <= 1e-14 * (1.0 + x.abs()) {
                continue;
            }
        }
        out.push(x);
    }
    out
}

/// Split every panel wider than `max_width` into equal pieces.
pub fn cap_panel_width(breaks: &[f64], max_width: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(breaks.len());
    for w in breaks.windows(2) {
        out.push(w[0]);
        let k = ((w[1] - w[0]) / max_width).ceil() as usize;
        for j in 1..k {
            out.push(w[0] + (w[1] - w[0]) * j as f64 / k as f64);
        }
    }
    if let Some(&l) = breaks.last() {
        out.push(l);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_ratio_small_integers() {
        // Γ(2)Γ(6)/(Γ(3)Γ(5)) = 120/(2·24)
        assert!((gamma_ratio(2.0, 6.0, 3.0, 5.0) - 2.5).abs() < 1e-13);
    }

    #[test]
    fn gamma_sign_negative_arguments() {
        let (l, s) = ln_gamma_signed(-0.5);
        // Γ(-1/2) = -2√π
        assert_eq!(s, -1.0);
        assert!((l - (2.0 * PI.sqrt()).ln()).abs() < 1e-13);
        assert!(is_gamma_pole(-3.0));
        assert!(!is_gamma_pole(-2.5));
    }

    #[test]
    fn gamma_ratio_large_arguments_finite() {
        let r = gamma_ratio(300.5, 1.0, 300.0, 1.0);
        assert!((r / 300f64.sqrt() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn binomial_coefficients_match_product_and_gamma_paths() {
        for &b in &[0.5, 1.0, 2.5, 3.0] {
            let direct = (0..70).fold(1.0, |c, j| c * (b + j as f64) / (j as f64 + 1.0));
            let via = binomial_series_coeff(b, 70);
            assert!((direct / via - 1.0).abs() < 1e-11, "b = {b}");
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for m in 1..20 {
            let (x, w) = gauss_legendre(m);
            for deg in 0..(2 * m) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "m={m} deg={deg}");
            }
        }
    }

    #[test]
    fn gk_handles_log_singularity() {
        let r = integrate_gk(|t| Complex64::new(-t.ln(), 0.0), 0.0, 1.0, 1e-12, 1e-12, 200);
        assert!((r.value.re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        s.add(1.0);
        s.add(-1e16);
        assert_eq!(s.value(), 1.0);
    }
}

//! Geometry of the unit ball of `C^n`: Hermitian inner product, the
//! involutive automorphisms `φ_a`, Bergman distance, Carleson tubes and
//! non-isotropic caps, and the Poisson and Green kernels.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::ops::{Add, Index, Mul, Neg, Sub};

/// Tolerance within which a point counts as lying on the unit sphere.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// A point of `C^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVec {
    coords: SmallVec<[Complex64; 4]>,
}

impl CVec {
    /// Unchecked constructor.
    pub fn new(coords: impl IntoIterator<Item = Complex64>) -> Self {
        CVec { coords: coords.into_iter().collect() }
    }

    pub fn zeros(n: usize) -> Self {
        CVec { coords: SmallVec::from_elem(Complex64::new(0.0, 0.0), n) }
    }

    /// The standard basis vector `e_k` (0-based).
    pub fn basis(n: usize, k: usize) -> Self {
        let mut z = Self::zeros(n);
        z.coords[k] = Complex64::new(1.0, 0.0);
        z
    }

    pub fn from_reals(xs: &[f64]) -> Self {
        Self::new(xs.iter().map(|&x| Complex64::new(x, 0.0)))
    }

    /// A point strictly inside the unit ball.
    pub fn interior(coords: impl IntoIterator<Item = Complex64>) -> Result<Self> {
        let z = Self::new(coords);
        let r = z.norm();
        if r < 1.0 {
            Ok(z)
        } else {
            Err(Error::NotInterior { norm: r })
        }
    }

    /// A point on the unit sphere; within [`BOUNDARY_TOL`] of norm one and
    /// renormalized exactly.
    pub fn boundary(coords: impl IntoIterator<Item = Complex64>) -> Result<Self> {
        let z = Self::new(coords);
        let r = z.norm();
        if (r - 1.0).abs() <= BOUNDARY_TOL {
            Ok(z.scale(1.0 / r))
        } else {
            Err(Error::NotOnSphere { norm: r })
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [Complex64] {
        &mut self.coords
    }

    pub fn norm_sq(&self) -> f64 {
        self.coords.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(self.coords.iter().map(|z| z * c))
    }

    pub fn scale_c(&self, c: Complex64) -> Self {
        Self::new(self.coords.iter().map(|z| z * c))
    }

    pub fn conj(&self) -> Self {
        Self::new(self.coords.iter().map(|z| z.conj()))
    }

    /// `self / |self|`, or `e_1` for the zero vector.
    pub fn direction(&self) -> Self {
        let r = self.norm();
        if r > 0.0 {
            self.scale(1.0 / r)
        } else {
            Self::basis(self.dim(), 0)
        }
    }

    pub fn is_interior(&self) -> bool {
        self.norm_sq() < 1.0
    }

    /// `⟨self, w⟩` without a dimension check.
    #[inline]
    pub fn dot(&self, w: &CVec) -> Complex64 {
        debug_assert_eq!(self.dim(), w.dim());
        let mut s = Complex64::new(0.0, 0.0);
        for (a, b) in self.coords.iter().zip(w.coords.iter()) {
            s += a * b.conj();
        }
        s
    }

    pub fn max_abs_diff(&self, w: &CVec) -> f64 {
        self.coords.iter().zip(w.coords.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

impl Index<usize> for CVec {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.coords[i]
    }
}

impl Add for &CVec {
    type Output = CVec;
    fn add(self, o: &CVec) -> CVec {
        CVec::new(self.coords.iter().zip(o.coords.iter()).map(|(a, b)| a + b))
    }
}

impl Sub for &CVec {
    type Output = CVec;
    fn sub(self, o: &CVec) -> CVec {
        CVec::new(self.coords.iter().zip(o.coords.iter()).map(|(a, b)| a - b))
    }
}

impl Neg for &CVec {
    type Output = CVec;
    fn neg(self) -> CVec {
        CVec::new(self.coords.iter().map(|a| -a))
    }
}

impl Mul<Complex64> for &CVec {
    type Output = CVec;
    fn mul(self, c: Complex64) -> CVec {
        self.scale_c(c)
    }
}

/// A Carleson tube `Q_r(ζ)` (and its boundary cap `Q(ζ, r)`).
#[derive(Debug, Clone, PartialEq)]
pub struct TubeSpec {
    center: CVec,
    radius: f64,
}

impl TubeSpec {
    pub fn new(center: CVec, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius <= 2.0) {
            return Err(Error::BadRadius(radius));
        }
        let center = CVec::boundary(center.coords().iter().copied())?;
        Ok(TubeSpec { center, radius })
    }

    pub fn center(&self) -> &CVec {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

fn check_dims(z: &CVec, w: &CVec) -> Result<()> {
    if z.dim() != w.dim() {
        return Err(Error::DimensionMismatch { expected: z.dim(), got: w.dim() });
    }
    Ok(())
}

/// `⟨z, w⟩ = Σ z_j conj(w_j)`.
pub fn herm_inner(z: &CVec, w: &CVec) -> Result<Complex64> {
    check_dims(z, w)?;
    Ok(z.dot(w))
}

/// The involution `φ_a(z) = (a − P_a z − s_a Q_a z) / (1 − ⟨z, a⟩)`.
pub fn mobius(a: &CVec, z: &CVec) -> Result<CVec> {
    check_dims(a, z)?;
    let aa = a.norm_sq();
    if aa >= 1.0 {
        return Err(Error::NotInterior { norm: aa.sqrt() });
    }
    let zn = z.norm();
    if zn > 1.0 + BOUNDARY_TOL {
        return Err(Error::OutOfRange(format!("|z| = {zn} exceeds 1")));
    }
    Ok(mobius_unchecked(a, z))
}

/// [`mobius`] without validation.
pub fn mobius_unchecked(a: &CVec, z: &CVec) -> CVec {
    let aa = a.norm_sq();
    let za = z.dot(a);
    let denom = Complex64::new(1.0, 0.0) - za;
    let sa = (1.0 - aa).sqrt();
    let n = a.dim();
    let mut out = CVec::zeros(n);
    if aa == 0.0 {
        for j in 0..n {
            out.coords[j] = -z.coords[j];
        }
        return out;
    }
    let t = za / aa;
    for j in 0..n {
        let p = t * a.coords[j];
        let q = z.coords[j] - p;
        out.coords[j] = (a.coords[j] - p - q * sa) / denom;
    }
    out
}

/// `1 − |φ_a(z)|²` through `(1−|a|²)(1−|z|²)/|1−⟨z,a⟩|²`, accurate near the
/// boundary where the direct subtraction cancels.
pub fn mobius_defect(a: &CVec, z: &CVec) -> f64 {
    let denom = (Complex64::new(1.0, 0.0) - z.dot(a)).norm_sqr();
    (1.0 - a.norm_sq()) * (1.0 - z.norm_sq()) / denom
}

/// Bergman distance `β(z, w) = atanh |φ_z(w)|`.
pub fn bergman_dist(z: &CVec, w: &CVec) -> Result<f64> {
    check_dims(z, w)?;
    for p in [z, w] {
        let r = p.norm();
        if r >= 1.0 {
            return Err(Error::NotInterior { norm: r });
        }
    }
    Ok(bergman_dist_unchecked(z, w))
}

/// [`bergman_dist`] without validation.
pub fn bergman_dist_unchecked(z: &CVec, w: &CVec) -> f64 {
    let d = mobius_defect(z, w).clamp(0.0, 1.0);
    if d <= 0.75 {
        // β = ½ log((1+ρ)/(1−ρ)) = log(1+ρ) − ½ log(1−ρ²) with 1−ρ² = d;
        // both terms are symmetric in (z, w).
        let rho = (1.0 - d).sqrt();
        rho.ln_1p() - 0.5 * d.ln()
    } else {
        // Near the diagonal, compute ρ from the automorphism directly.
        let rho = mobius_unchecked(z, w).norm().min(1.0 - f64::EPSILON);
        rho.atanh()
    }
}

/// Invariant Poisson kernel `(1−|z|²)^n / |1−⟨z,w⟩|^{2n}`.
pub fn poisson_kernel(z: &CVec, w: &CVec) -> Result<f64> {
    check_dims(z, w)?;
    let r = z.norm();
    if r >= 1.0 {
        return Err(Error::NotInterior { norm: r });
    }
    Ok(poisson_kernel_unchecked(z, w))
}

pub fn poisson_kernel_unchecked(z: &CVec, w: &CVec) -> f64 {
    let n = z.dim() as i32;
    let d = (Complex64::new(1.0, 0.0) - z.dot(w)).norm_sqr();
    ((1.0 - z.norm_sq()) / d).powi(n)
}

/// Invariant Green function `G(z)` for `0 < |z| < 1`.
pub fn green(z: &CVec) -> Result<f64> {
    let x = z.norm_sq();
    if x == 0.0 {
        return Err(Error::SingularAtOrigin);
    }
    if x >= 1.0 {
        return Err(Error::NotInterior { norm: x.sqrt() });
    }
    Ok(green_from_defect(z.dim(), 1.0 - x))
}

/// `G(φ_a(z))`, with the defect taken from the product identity.
pub fn green_pair(z: &CVec, a: &CVec) -> Result<f64> {
    check_dims(z, a)?;
    if a.norm() >= 1.0 {
        return Err(Error::NotInterior { norm: a.norm() });
    }
    let d = mobius_defect(a, z);
    if d >= 1.0 {
        return Err(Error::SingularAtOrigin);
    }
    Ok(green_from_defect(z.dim(), d))
}

/// `G` as a function of `d = 1 − |z|²` in dimension `n`.
///
/// `G = ((n+1)/(4n)) ∫_{1−d}^{1} (1−u)^{n−1} u^{−n} du`.
pub fn green_from_defect(n: usize, d: f64) -> f64 {
    let nf = n as f64;
    let c = (nf + 1.0) / (4.0 * nf);
    if d <= 0.0 {
        return 0.0;
    }
    if n == 1 {
        return -0.5 * (-d).ln_1p();
    }
    if d <= 0.5 {
        // ∫_0^d v^{n−1}(1−v)^{−n} dv = Σ_j C(n+j−1, j) d^{n+j}/(n+j)
        let mut term_coeff = 1.0; // C(n+j−1, j)
        let mut pow = d.powi(n as i32);
        let mut sum = 0.0;
        for j in 0..400 {
            let jf = j as f64;
            let t = term_coeff * pow / (nf + jf);
            sum += t;
            if t < 1e-17 * sum {
                break;
            }
            term_coeff *= (nf + jf) / (jf + 1.0);
            pow *= d;
        }
        c * sum
    } else {
        // Expand (1−u)^{n−1} binomially and integrate term by term on [x, 1].
        let x = 1.0 - d;
        let mut sum = 0.0;
        let mut binom = 1.0;
        for j in 0..n {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let e = j as f64 - nf + 1.0; // exponent after integrating u^{j−n}
            let piece = if j == n - 1 { -x.ln() } else { (1.0 - x.powf(e)) / e };
            sum += sign * binom * piece;
            binom *= (nf - 1.0 - j as f64) / (j as f64 + 1.0);
        }
        c * sum
    }
}

/// `z ∈ Q_r(ζ)`: `|z| < 1` and `|1 − ⟨z, ζ⟩| < r`.
pub fn tube_contains(t: &TubeSpec, z: &CVec) -> bool {
    z.is_interior() && (Complex64::new(1.0, 0.0) - z.dot(&t.center)).norm() < t.radius
}

/// `ξ ∈ Q(ζ, r)`: `|1 − ⟨ζ, ξ⟩| < r`.
pub fn cap_contains(t: &TubeSpec, xi: &CVec) -> bool {
    (Complex64::new(1.0, 0.0) - t.center.dot(xi)).norm() < t.radius
}

/// An orthonormal basis of `C^n` whose first vector is the unit vector `zeta`.
pub fn unitary_frame(zeta: &CVec) -> Vec<CVec> {
    let n = zeta.dim();
    let mut basis: Vec<CVec> = vec![zeta.direction()];
    // Add standard basis vectors in order of least overlap with ζ.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| zeta[i].norm().partial_cmp(&zeta[j].norm()).unwrap().then(i.cmp(&j)));
    for k in order {
        if basis.len() == n {
            break;
        }
        let mut v = CVec::basis(n, k);
        for _ in 0..2 {
            for b in &basis {
                let c = v.dot(b);
                v = &v - &(b * c);
            }
        }
        let r = v.norm();
        if r > 1e-8 {
            basis.push(v.scale(1.0 / r));
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn inner_product_examples() {
        let e1 = CVec::basis(2, 0);
        assert_eq!(herm_inner(&e1, &e1).unwrap(), c(1.0, 0.0));
        let z = CVec::new([c(0.0, 1.0), c(0.0, 0.0)]);
        let w = CVec::new([c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(herm_inner(&z, &w).unwrap(), c(0.0, 0.0));
        let h = CVec::new([c(0.5, 0.0), c(0.0, 0.5)]);
        assert!((herm_inner(&h, &h).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        assert!(herm_inner(&e1, &CVec::basis(3, 0)).is_err());
    }

    #[test]
    fn mobius_examples() {
        let a = CVec::from_reals(&[0.5, 0.0]);
        let p = mobius(&a, &CVec::zeros(2)).unwrap();
        assert!(p.max_abs_diff(&a) < 1e-15);
        assert!(mobius(&a, &a).unwrap().norm() < 1e-15);
        let z = CVec::new([c(0.0, 0.3), c(0.2, 0.0)]);
        let m0 = mobius(&CVec::zeros(2), &z).unwrap();
        assert!(m0.max_abs_diff(&(-&z)) < 1e-15);
        // n = 1, a = 0.5, z = 0.3i
        let a1 = CVec::from_reals(&[0.5]);
        let z1 = CVec::new([c(0.0, 0.3)]);
        let lhs = 1.0 - mobius(&a1, &z1).unwrap().norm_sq();
        let rhs = 0.75 * 0.91 / (c(1.0, 0.0) - c(0.0, 0.15)).norm_sqr();
        assert!((lhs - rhs).abs() < 1e-14);
        assert!((rhs - 0.667_481_662_6).abs() < 1e-9);
        assert!(mobius(&CVec::from_reals(&[1.0]), &z1).is_err());
    }

    #[test]
    fn bergman_distance_examples() {
        let o = CVec::zeros(2);
        assert_eq!(bergman_dist(&o, &o).unwrap(), 0.0);
        let w = CVec::from_reals(&[0.3, 0.4]);
        assert!((bergman_dist(&o, &w).unwrap() - 0.5 * 3f64.ln()).abs() < 1e-14);
        assert!(bergman_dist(&o, &CVec::from_reals(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn poisson_examples() {
        let zeta = CVec::boundary([c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        assert!((poisson_kernel(&CVec::zeros(2), &zeta).unwrap() - 1.0).abs() < 1e-15);
        let p = poisson_kernel(&CVec::from_reals(&[0.9, 0.0]), &CVec::from_reals(&[1.0, 0.0])).unwrap();
        assert!((p - 361.0).abs() < 1e-9);
    }

    #[test]
    fn green_examples() {
        let z = CVec::from_reals(&[1.0 / E]);
        assert!((green(&z).unwrap() - 1.0).abs() < 1e-14);
        assert!(matches!(green(&CVec::zeros(2)), Err(Error::SingularAtOrigin)));
        let g3 = green(&CVec::from_reals(&[0.3, 0.0])).unwrap();
        let g7 = green(&CVec::from_reals(&[0.7, 0.0])).unwrap();
        assert!(g3 > g7);
        for r in [0.9, 0.95, 0.99, 0.999] {
            let q = green(&CVec::from_reals(&[r, 0.0])).unwrap() / (1.0 - r * r).powi(2);
            assert!(q > 0.15 && q < 0.35, "r = {r}: {q}");
        }
    }

    #[test]
    fn green_branches_agree_with_quadrature() {
        use crate::special::integrate_gk;
        for n in 2..=4usize {
            for &r in &[0.05, 0.3, 0.69, 0.71, 0.9, 0.999] {
                let nf = n as f64;
                let q = integrate_gk(
                    |t| c((1.0 - t * t).powi(n as i32 - 1) * t.powf(1.0 - 2.0 * nf), 0.0),
                    r,
                    1.0,
                    1e-15,
                    1e-13,
                    500,
                );
                let oracle = (nf + 1.0) / (2.0 * nf) * q.value.re;
                let g = green_from_defect(n, 1.0 - r * r);
                assert!((g / oracle - 1.0).abs() < 1e-10, "n={n} r={r}: {g} vs {oracle}");
            }
        }
    }

    #[test]
    fn tube_and_cap_membership() {
        let zeta = CVec::basis(2, 0);
        let t = TubeSpec::new(zeta.clone(), 0.1).unwrap();
        assert!(tube_contains(&t, &zeta.scale(0.95)));
        assert!(!tube_contains(&t, &zeta.scale(0.85)));
        let big = TubeSpec::new(zeta.clone(), 1.0 + 1e-9).unwrap();
        assert!(tube_contains(&big, &CVec::zeros(2)));
        let unit = TubeSpec::new(zeta.clone(), 1.0).unwrap();
        assert!(!tube_contains(&unit, &CVec::zeros(2)));
        assert!(cap_contains(&t, &zeta));
        assert!(TubeSpec::new(zeta.clone(), 2.5).is_err());
        assert!(TubeSpec::new(zeta, 0.0).is_err());
    }

    #[test]
    fn frame_is_unitary() {
        let zeta = CVec::boundary([c(0.6, 0.0), c(0.0, 0.48), c(0.64, 0.0)]).unwrap();
        let f = unitary_frame(&zeta);
        assert_eq!(f.len(), 3);
        for i in 0..3 {
            for j in 0..3 {
                let d = f[i].dot(&f[j]);
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((d - c(e, 0.0)).norm() < 1e-14);
            }
        }
        assert!(f[0].max_abs_diff(&zeta) < 1e-15);
    }
}

//! Randomly shifted Kronecker sequences and the maps that carry the unit
//! cube onto the sphere and ball.

use crate::geom::CVec;
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::TAU;

/// Generator vector of the `d`-dimensional R_d sequence: `α_j = φ_d^{−j}`
/// where `φ_d` is the positive root of `x^{d+1} = x + 1`.
pub fn kronecker_alpha(d: usize) -> Vec<f64> {
    let mut phi = 2.0f64;
    for _ in 0..60 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    (1..=d).map(|j| phi.powi(-(j as i32)).fract()).collect()
}

/// `count` points of the shifted Kronecker sequence in `[0, 1)^d`.
pub fn kronecker_points(d: usize, count: usize, shift: &[f64]) -> Vec<Vec<f64>> {
    let alpha = kronecker_alpha(d);
    (0..count)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let x = shift[j] + (i as f64 + 1.0) * alpha[j];
                    x - x.floor()
                })
                .collect()
        })
        .collect()
}

/// A uniformly random shift in `[0, 1)^d`.
pub fn random_shift<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    (0..d).map(|_| rng.random::<f64>()).collect()
}

/// Number of cube coordinates consumed by [`cube_to_sphere`].
pub fn sphere_cube_dim(n: usize) -> usize {
    2 * n - 1
}

/// Map `u ∈ [0,1)^{2n−1}` onto `S_n` so that the uniform measure goes to σ:
/// `(|ζ_1|², …, |ζ_n|²)` is uniform on the simplex (stick breaking) and the
/// phases are independent and uniform.
pub fn cube_to_sphere(n: usize, u: &[f64]) -> CVec {
    let mut rest = 1.0;
    let mut mods = Vec::with_capacity(n);
    for j in 0..n - 1 {
        let k = (n - 1 - j) as f64;
        let x = rest * (1.0 - (1.0 - u[j]).powf(1.0 / k));
        mods.push(x);
        rest -= x;
    }
    mods.push(rest.max(0.0));
    let z = CVec::new(
        mods.iter()
            .enumerate()
            .map(|(j, &m)| Complex64::from_polar(m.max(0.0).sqrt(), TAU * u[n - 1 + j])),
    );
    let r = z.norm();
    z.scale(1.0 / r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_is_golden_ratio_in_one_dimension() {
        let a = kronecker_alpha(1);
        assert!((a[0] - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_map_lands_on_sphere() {
        for n in 1..5 {
            let pts = kronecker_points(sphere_cube_dim(n), 50, &vec![0.3; 2 * n - 1]);
            for p in pts {
                let z = cube_to_sphere(n, &p);
                assert!((z.norm() - 1.0).abs() < 1e-14);
            }
        }
    }
}

//! Small dense complex matrix helpers on top of `nalgebra`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly;

pub type CMatrix = DMatrix<Complex64>;

/// Ascending coefficients of `det(kI + A)` by the Faddeev-LeVerrier
/// recursion. The result is monic of degree `n`.
pub fn char_poly_plus(a: &CMatrix) -> Vec<Complex64> {
    let n = a.nrows();
    // det(kI + A) = det(kI - B) with B = -A.
    let b = -a;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
    coeffs[n] = Complex64::new(1.0, 0.0);
    let mut m = CMatrix::zeros(n, n);
    for k in 1..=n {
        // M_k = B M_{k-1} + c_{n-k+1} I
        let mut next = &b * &m;
        for i in 0..n {
            next[(i, i)] += coeffs[n - k + 1];
        }
        m = next;
        let bm = &b * &m;
        coeffs[n - k] = -bm.trace() / k as f64;
    }
    coeffs
}

/// Same coefficients from LU determinants at `n + 1` points on a circle,
/// interpolated by a discrete Fourier transform.
pub fn char_poly_plus_by_interpolation(a: &CMatrix) -> Vec<Complex64> {
    let n = a.nrows();
    let radius = a.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    let pts = n + 1;
    let values: Vec<Complex64> = (0..pts)
        .map(|j| {
            let k = Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * j as f64 / pts as f64);
            (a + CMatrix::identity(n, n) * k).determinant()
        })
        .collect();
    (0..pts)
        .map(|m| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &v) in values.iter().enumerate() {
                acc += v * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * ((j * m) % pts) as f64 / pts as f64);
            }
            acc / (pts as f64 * radius.powi(m as i32))
        })
        .collect()
}

/// Eigenvalues as roots of the characteristic polynomial.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>> {
    let p = char_poly_plus(&(-a));
    let mut ev = poly::roots(&p)?;
    poly::sort_roots(&mut ev);
    Ok(ev)
}

/// Eigenvector of `a` for the (approximate) eigenvalue `lambda` by inverse
/// iteration from `start`. The result has unit Euclidean norm.
pub fn eigenvector(a: &CMatrix, lambda: Complex64, start: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    let mut shifted = a - CMatrix::identity(n, n) * lambda;
    for i in 0..n {
        // Keep the solve well-posed when lambda is exact.
        shifted[(i, i)] += Complex64::new(1e-13 * scale, 0.0);
    }
    let lu = shifted.lu();
    let mut v = nalgebra::DVector::from_column_slice(start);
    if v.norm() == 0.0 {
        v = nalgebra::DVector::from_element(n, Complex64::new(1.0, 0.0));
    }
    for _ in 0..3 {
        v = lu
            .solve(&v)
            .ok_or_else(|| Error::Search("singular inverse-iteration system".into()))?;
        let norm = v.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Search("inverse iteration broke down".into()));
        }
        v /= Complex64::new(norm, 0.0);
    }
    Ok(v.iter().copied().collect())
}

pub fn mat_vec(a: &CMatrix, v: &[Complex64]) -> Vec<Complex64> {
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)] * v[j]).sum()).collect()
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CMatrix {
        CMatrix::from_fn(4, 4, |i, j| Complex64::new((i * 3 + j) as f64 * 0.37 - 1.0, ((i + 2 * j) % 3) as f64 * 0.5 - 0.2))
    }

    #[test]
    fn two_char_poly_routes_agree() {
        let a = sample();
        let p = char_poly_plus(&a);
        let q = char_poly_plus_by_interpolation(&a);
        for (x, y) in p.iter().zip(&q) {
            assert!((x - y).norm() < 1e-9 * (1.0 + x.norm()), "{x} vs {y}");
        }
        assert!((p[4] - 1.0).norm() < 1e-15);
        // trace term
        assert!((p[3] - a.trace()).norm() < 1e-12);
    }

    #[test]
    fn eigenpairs() {
        let a = sample();
        for lambda in eigenvalues(&a).unwrap() {
            let v = eigenvector(&a, lambda, &[Complex64::new(1.0, 0.0); 4]).unwrap();
            let av = mat_vec(&a, &v);
            let res: f64 = av.iter().zip(&v).map(|(x, y)| (x - lambda * y).norm_sqr()).sum::<f64>().sqrt();
            assert!(res < 1e-9, "{res}");
        }
    }
}

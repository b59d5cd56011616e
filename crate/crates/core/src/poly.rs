//! Dense complex polynomials, coefficients stored in ascending order.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// `p(x) = Σ coeffs[i] xⁱ`.
pub fn eval(coeffs: &[Complex64], x: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

pub fn derivative(coeffs: &[Complex64]) -> Vec<Complex64> {
    coeffs.iter().enumerate().skip(1).map(|(i, &c)| c * i as f64).collect()
}

/// Coefficients of `p(x + shift)`.
pub fn taylor_shift(coeffs: &[Complex64], shift: Complex64) -> Vec<Complex64> {
    let mut out = coeffs.to_vec();
    let n = out.len();
    // Repeated synthetic division.
    for i in 0..n {
        for j in (i..n - 1).rev() {
            let next = out[j + 1];
            out[j] += shift * next;
        }
    }
    out
}

pub fn mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Drops exactly-zero leading coefficients.
fn trimmed(coeffs: &[Complex64]) -> &[Complex64] {
    let mut len = coeffs.len();
    while len > 1 && coeffs[len - 1].norm() == 0.0 {
        len -= 1;
    }
    &coeffs[..len]
}

const MAX_ABERTH_ITERS: usize = 500;

/// All roots of a polynomial by Aberth-Ehrlich simultaneous iteration,
/// each polished with Newton steps.
pub fn roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let p = trimmed(coeffs);
    let degree = p.len() - 1;
    if degree == 0 {
        return Ok(vec![]);
    }
    let lead = p[degree];
    // Initial guesses on a circle of the Fujiwara bound radius.
    let radius = (0..degree)
        .map(|i| (p[i] / lead).norm().powf(1.0 / (degree - i) as f64))
        .fold(0.0, f64::max)
        .max(1e-3);
    let guesses: Vec<Complex64> = (0..degree)
        .map(|i| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * (i as f64 + 0.25) / degree as f64 + 0.4))
        .collect();
    roots_from(p, guesses)
}

/// Aberth iteration started from caller-supplied guesses (warm start).
pub fn roots_from(coeffs: &[Complex64], mut z: Vec<Complex64>) -> Result<Vec<Complex64>> {
    let p = trimmed(coeffs);
    let degree = p.len() - 1;
    if z.len() != degree {
        return Err(Error::Domain(format!("{} guesses for a degree-{degree} polynomial", z.len())));
    }
    if degree == 0 {
        return Ok(z);
    }
    if degree == 1 {
        return Ok(vec![-p[0] / p[1]]);
    }
    // Separate coincident guesses so the Aberth correction is defined.
    for i in 0..degree {
        for j in 0..i {
            if (z[i] - z[j]).norm() < 1e-12 * (1.0 + z[i].norm()) {
                let bump = Complex64::new(1e-7, 1e-7) * (1.0 + z[i].norm()) * (i as f64);
                z[i] += bump;
            }
        }
    }
    let dp = derivative(p);
    let mut converged = false;
    for _ in 0..MAX_ABERTH_ITERS {
        let mut max_rel = 0.0_f64;
        for i in 0..degree {
            let pv = eval(p, z[i]);
            if pv == Complex64::new(0.0, 0.0) {
                continue;
            }
            let ratio = pv / eval(&dp, z[i]);
            let repulsion: Complex64 = (0..degree).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let step = ratio / (1.0 - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                max_rel = max_rel.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if max_rel < 1e-15 {
            converged = true;
            break;
        }
    }
    if !converged && z.iter().any(|r| !r.is_finite()) {
        return Err(Error::Search("Aberth iteration diverged".into()));
    }
    for r in z.iter_mut() {
        for _ in 0..2 {
            let d = eval(&dp, *r);
            if d.norm() == 0.0 {
                break;
            }
            let step = eval(p, *r) / d;
            if step.is_finite() && step.norm() < 1e-6 * (1.0 + r.norm()) {
                *r -= step;
            }
        }
    }
    Ok(z)
}

/// Orders roots lexicographically by (real, imaginary) part.
pub fn sort_roots(roots: &mut [Complex64]) {
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Smallest pairwise distance between roots.
pub fn min_gap(roots: &[Complex64]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..roots.len() {
        for j in 0..i {
            gap = gap.min((roots[i] - roots[j]).norm());
        }
    }
    gap
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn from_roots(rs: &[Complex64]) -> Vec<Complex64> {
        rs.iter().fold(vec![c(1.0, 0.0)], |acc, &r| mul(&acc, &[-r, c(1.0, 0.0)]))
    }

    #[test]
    fn taylor_shift_matches_evaluation() {
        let p = vec![c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 3.0), c(2.0, -1.0)];
        let s = c(0.3, -0.7);
        let q = taylor_shift(&p, s);
        for x in [c(0.1, 0.2), c(-1.0, 0.5)] {
            assert!((eval(&q, x) - eval(&p, x + s)).norm() < 1e-13);
        }
    }

    #[test]
    fn recovers_known_roots() {
        let rs = vec![c(1.0, 0.0), c(-2.0, 0.5), c(0.0, 3.0), c(0.25, -0.25), c(4.0, 4.0)];
        let mut found = roots(&from_roots(&rs)).unwrap();
        let mut expected = rs.clone();
        sort_roots(&mut found);
        sort_roots(&mut expected);
        for (a, b) in found.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-11, "{a} vs {b}");
        }
    }

    #[test]
    fn linear_and_constant() {
        assert_eq!(roots(&[c(3.0, 0.0)]).unwrap(), vec![]);
        let r = roots(&[c(2.0, 1.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(r, vec![c(-2.0, -1.0)]);
    }

    proptest! {
        #[test]
        fn roots_reproduce_polynomial(parts in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 2..7)) {
            let rs: Vec<Complex64> = parts.iter().map(|&(a, b)| c(a, b)).collect();
            prop_assume!(min_gap(&rs) > 1e-2);
            let p = from_roots(&rs);
            let found = roots(&p).unwrap();
            for r in &rs {
                let nearest = found.iter().map(|f| (f - r).norm()).fold(f64::INFINITY, f64::min);
                prop_assert!(nearest < 1e-8, "root {} missed by {}", r, nearest);
            }
        }
    }
}

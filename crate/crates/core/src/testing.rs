//! Slow independent oracles used only by the unit tests.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::elliptic::EllipticData;

fn csc2(w: Complex64) -> Complex64 {
    let s = (PI * w).sin();
    1.0 / (s * s)
}

/// ℘ from its absolutely convergent lattice sum, taken row by row with
/// `Σₘ (w + m)⁻² = π² csc²(πw)` for each row.
pub fn lattice_sum_wp(z: Complex64, tau: Complex64) -> Complex64 {
    let mut acc = PI * PI * (csc2(z) - 1.0 / 3.0);
    for n in 1..200 {
        let nt = n as f64 * tau;
        let row = csc2(z - nt) + csc2(z + nt) - 2.0 * csc2(nt);
        acc += PI * PI * row;
        if row.norm() < 1e-18 {
            break;
        }
    }
    acc
}

/// Eisenstein series `G₄ = Σ' ω⁻⁴`, rows summed with
/// `Σₘ (w + m)⁻⁴ = π⁴ (2 csc² cot² + csc⁴)(πw) / 3`.
pub fn lattice_sum_g4(tau: Complex64) -> Complex64 {
    let mut acc = Complex64::new(PI.powi(4) / 45.0, 0.0);
    for n in 1..200 {
        let u = PI * n as f64 * tau;
        let (s, c) = (u.sin(), u.cos());
        let row = 2.0 * PI.powi(4) * (2.0 * c * c / s.powi(4) + 1.0 / s.powi(4)) / 3.0;
        acc += row;
        if row.norm() < 1e-18 {
            break;
        }
    }
    acc
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `σ⁽ⁿ⁾(z)` from `σ′ = σζ`, `ζ′ = -℘` and `℘″ = 6℘² - g₂/2` by Leibniz
/// recursion; exact up to rounding.
pub fn sigma_derivs_by_recursion(z: Complex64, n_max: usize, d: &EllipticData) -> Vec<Complex64> {
    let mut wp = vec![d.wp(z).unwrap(), d.wp_prime(z).unwrap()];
    while wp.len() < n_max.max(2) {
        let j = wp.len() - 2;
        let next = if j == 0 {
            6.0 * wp[0] * wp[0] - d.g2() / 2.0
        } else {
            6.0 * (0..=j).map(|i| binomial(j, i) * wp[i] * wp[j - i]).sum::<Complex64>()
        };
        wp.push(next);
    }
    let zeta_deriv = |j: usize| if j == 0 { d.zeta(z).unwrap() } else { -wp[j - 1] };
    let mut sig = vec![d.sigma(z)];
    for n in 0..n_max {
        let next = (0..=n).map(|k| binomial(n, k) * sig[k] * zeta_deriv(n - k)).sum();
        sig.push(next);
    }
    sig
}

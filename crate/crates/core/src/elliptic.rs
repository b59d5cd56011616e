//! Weierstrass functions for the lattice `Z + τZ`.
//!
//! Everything is evaluated from nome series in `x = exp(2πiτ)` after reducing
//! the argument into the cell centred at the origin. The quasi-period
//! constants follow the full-period convention
//!
//! ```text
//! ζ(z + 1) = ζ(z) + 2η₁,   ζ(z + τ) = ζ(z) + 2η₂,   η₁τ − η₂ = iπ.
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_TRUNC: usize = 40;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_POLE_THRESHOLD: f64 = 1e-9;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    P,
    Pprime,
    Zeta,
    Sigma,
}

/// A normalized lattice `Z + τZ` with its quasi-periods and invariants.
///
/// Immutable once built; share it freely between threads.
#[derive(Debug, Clone)]
pub struct EllipticData {
    tau: Complex64,
    eta1: Complex64,
    eta2: Complex64,
    g2: Complex64,
    g3: Complex64,
    trunc: usize,
    tol: f64,
    pole_threshold: f64,
    /// `x = exp(2πiτ)`.
    x: Complex64,
    /// `xⁿ` for `n = 1..=trunc`.
    x_pow: Vec<Complex64>,
    /// `1 / (1 - xⁿ)` for `n = 1..=trunc`.
    inv_one_minus: Vec<Complex64>,
}

/// Builds the lattice data for `τ` with default truncation and tolerance.
pub fn lattice_invariants(tau: Complex64) -> Result<EllipticData> {
    EllipticData::with_params(tau, DEFAULT_TRUNC, DEFAULT_TOL)
}

impl EllipticData {
    pub fn with_params(tau: Complex64, trunc: usize, tol: f64) -> Result<Self> {
        if !(tau.im > 0.0) || !tau.re.is_finite() {
            return Err(Error::Domain(format!("Im τ must be positive, got τ = {tau}")));
        }
        if trunc == 0 {
            return Err(Error::Domain("series truncation must be positive".into()));
        }
        if !(tol > 0.0) {
            return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
        }

        let x = (2.0 * PI * I * tau).exp();
        let mut x_pow = Vec::with_capacity(trunc);
        let mut inv_one_minus = Vec::with_capacity(trunc);
        let mut p = Complex64::new(1.0, 0.0);
        for _ in 0..trunc {
            p *= x;
            x_pow.push(p);
            inv_one_minus.push(1.0 / (1.0 - p));
        }

        // Lambert series Σ n^k xⁿ/(1 - xⁿ) for k = 1, 3, 5.
        let mut s1 = Complex64::new(0.0, 0.0);
        let mut s3 = Complex64::new(0.0, 0.0);
        let mut s5 = Complex64::new(0.0, 0.0);
        for (idx, (&xn, &inv)) in x_pow.iter().zip(&inv_one_minus).enumerate() {
            let n = (idx + 1) as f64;
            let a = xn * inv;
            s1 += n * a;
            s3 += n.powi(3) * a;
            s5 += n.powi(5) * a;
        }
        let last = (x_pow[trunc - 1] * inv_one_minus[trunc - 1]).norm();
        let nt = trunc as f64;
        let checks = [
            ("eta1", 4.0 * PI * PI * nt * last),
            ("g2", 4.0 * PI.powi(4) / 3.0 * 240.0 * nt.powi(3) * last),
            ("g3", 8.0 * PI.powi(6) / 27.0 * 504.0 * nt.powi(5) * last),
            // Worst term of the ℘′ series on the reduced cell.
            ("wp series", 16.0 * PI.powi(3) * nt * nt * (-PI * nt * tau.im).exp()),
        ];
        for (constant, last_term) in checks {
            if !(last_term <= tol) {
                return Err(Error::Accuracy { constant, last_term, tol });
            }
        }

        let eta1 = PI * PI / 6.0 * (1.0 - 24.0 * s1);
        let eta2 = eta1 * tau - I * PI;
        let g2 = 4.0 * PI.powi(4) / 3.0 * (1.0 + 240.0 * s3);
        let g3 = 8.0 * PI.powi(6) / 27.0 * (1.0 - 504.0 * s5);

        Ok(Self {
            tau,
            eta1,
            eta2,
            g2,
            g3,
            trunc,
            tol,
            pole_threshold: DEFAULT_POLE_THRESHOLD,
            x,
            x_pow,
            inv_one_minus,
        })
    }

    pub fn with_pole_threshold(mut self, threshold: f64) -> Self {
        self.pole_threshold = threshold;
        self
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }
    pub fn eta1(&self) -> Complex64 {
        self.eta1
    }
    pub fn eta2(&self) -> Complex64 {
        self.eta2
    }
    pub fn g2(&self) -> Complex64 {
        self.g2
    }
    pub fn g3(&self) -> Complex64 {
        self.g3
    }
    pub fn trunc(&self) -> usize {
        self.trunc
    }
    pub fn tol(&self) -> f64 {
        self.tol
    }
    pub fn pole_threshold(&self) -> f64 {
        self.pole_threshold
    }

    /// `m + nτ`.
    pub fn lattice_point(&self, m: i64, n: i64) -> Complex64 {
        m as f64 + n as f64 * self.tau
    }

    /// Quasi-period increment `mη₁ + nη₂` belonging to the period `m + nτ`.
    pub fn eta_of(&self, m: i64, n: i64) -> Complex64 {
        m as f64 * self.eta1 + n as f64 * self.eta2
    }

    /// Splits `z = w + m + nτ` with `w` in the cell centred at the origin.
    pub fn reduce(&self, z: Complex64) -> (Complex64, i64, i64) {
        let n = (z.im / self.tau.im).round();
        let r = z - n * self.tau;
        let m = r.re.round();
        (r - m, m as i64, n as i64)
    }

    /// Representative of `z` modulo the lattice in the centred cell.
    pub fn reduce_mod_lattice(&self, z: Complex64) -> Complex64 {
        self.reduce(z).0
    }

    /// Nearest lattice point to `z` and the distance to it.
    pub fn nearest_lattice_point(&self, z: Complex64) -> (Complex64, f64) {
        let (w, m, n) = self.reduce(z);
        let mut best = (self.lattice_point(m, n), w.norm());
        for a in -1..=1 {
            for b in -1..=1 {
                let d = (w - self.lattice_point(a, b)).norm();
                if d < best.1 {
                    best = (self.lattice_point(m + a, n + b), d);
                }
            }
        }
        best
    }

    /// Distance from `z` to the lattice, i.e. `|z|` measured on the torus.
    pub fn torus_distance(&self, z: Complex64) -> f64 {
        self.nearest_lattice_point(z).1
    }

    fn check_pole(&self, z: Complex64, what: &str) -> Result<()> {
        let (lattice_point, distance) = self.nearest_lattice_point(z);
        if distance < self.pole_threshold {
            return Err(Error::Pole {
                what: what.to_string(),
                lattice_point,
                distance,
            });
        }
        Ok(())
    }

    /// Terms `(x u)ⁿ/(1-xⁿ)` and `(x/u)ⁿ/(1-xⁿ)` with `u = exp(2πiw)`.
    fn bloch_terms(&self, w: Complex64) -> impl Iterator<Item = (f64, Complex64, Complex64)> + '_ {
        let u = (2.0 * PI * I * w).exp();
        let xu = self.x * u;
        let xv = self.x / u;
        let mut pu = Complex64::new(1.0, 0.0);
        let mut pv = Complex64::new(1.0, 0.0);
        self.inv_one_minus.iter().enumerate().map(move |(idx, &inv)| {
            pu *= xu;
            pv *= xv;
            ((idx + 1) as f64, pu * inv, pv * inv)
        })
    }

    fn zeta_reduced(&self, w: Complex64) -> Complex64 {
        let t = PI * w;
        // 4 Σ aₙ sin(2nπw) with aₙ sin(2nπw) = (pu - pv)/(2i)
        let mut series = Complex64::new(0.0, 0.0);
        for (_, pu, pv) in self.bloch_terms(w) {
            series += (pu - pv) / (2.0 * I);
        }
        2.0 * self.eta1 * w + PI * (t.cos() / t.sin() + 4.0 * series)
    }

    fn wp_reduced(&self, w: Complex64) -> Complex64 {
        let s = (PI * w).sin();
        let mut series = Complex64::new(0.0, 0.0);
        for (n, pu, pv) in self.bloch_terms(w) {
            series += n * (pu + pv) / 2.0;
        }
        -2.0 * self.eta1 + PI * PI * (1.0 / (s * s) - 8.0 * series)
    }

    fn wpp_reduced(&self, w: Complex64) -> Complex64 {
        let t = PI * w;
        let s = t.sin();
        let mut series = Complex64::new(0.0, 0.0);
        for (n, pu, pv) in self.bloch_terms(w) {
            series += n * n * (pu - pv) / (2.0 * I);
        }
        PI.powi(3) * (-2.0 * t.cos() / (s * s * s) + 16.0 * series)
    }

    fn sigma_reduced(&self, w: Complex64) -> Complex64 {
        let u = (2.0 * PI * I * w).exp();
        let mut prod = Complex64::new(1.0, 0.0);
        for (&xn, &inv) in self.x_pow.iter().zip(&self.inv_one_minus) {
            prod *= (1.0 - xn * u) * (1.0 - xn / u) * inv * inv;
        }
        (self.eta1 * w * w).exp() * (PI * w).sin() / PI * prod
    }

    pub fn wp(&self, z: Complex64) -> Result<Complex64> {
        self.check_pole(z, "℘")?;
        Ok(self.wp_reduced(self.reduce(z).0))
    }

    pub fn wp_prime(&self, z: Complex64) -> Result<Complex64> {
        self.check_pole(z, "℘′")?;
        Ok(self.wpp_reduced(self.reduce(z).0))
    }

    pub fn zeta(&self, z: Complex64) -> Result<Complex64> {
        self.check_pole(z, "ζ")?;
        let (w, m, n) = self.reduce(z);
        Ok(self.zeta_reduced(w) + 2.0 * self.eta_of(m, n))
    }

    /// σ is entire, so this never fails.
    pub fn sigma(&self, z: Complex64) -> Complex64 {
        let (w, m, n) = self.reduce(z);
        let omega = self.lattice_point(m, n);
        let sign = if (m + n + m * n).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        sign * (2.0 * self.eta_of(m, n) * (w + omega / 2.0)).exp() * self.sigma_reduced(w)
    }
}

/// Evaluates one of the Weierstrass functions at `z`.
pub fn weierstrass(z: Complex64, kind: Kind, data: &EllipticData) -> Result<Complex64> {
    match kind {
        Kind::P => data.wp(z),
        Kind::Pprime => data.wp_prime(z),
        Kind::Zeta => data.zeta(z),
        Kind::Sigma => Ok(data.sigma(z)),
    }
}

/// The Lax kernel `F(x, z) = σ(z - x) / (σ(z) σ(x)) · exp(ζ(z) x)`.
pub fn kr_kernel(x: Complex64, z: Complex64, data: &EllipticData) -> Result<Complex64> {
    data.check_pole(x, "F(x, z) in x")?;
    let zeta_z = data.zeta(z)?;
    Ok(data.sigma(z - x) / (data.sigma(z) * data.sigma(x)) * (zeta_z * x).exp())
}

/// `∂F/∂x = F · (ζ(z) - ζ(z - x) - ζ(x))`; needs `z ≢ x` as well.
pub fn kr_kernel_dx(x: Complex64, z: Complex64, data: &EllipticData) -> Result<Complex64> {
    let f = kr_kernel(x, z, data)?;
    data.check_pole(z - x, "∂F/∂x at z ≡ x")?;
    Ok(f * (data.zeta(z)? - data.zeta(z - x)? - data.zeta(x)?))
}

pub const MAX_SIGMA_DERIV_ORDER: usize = 12;
const CAUCHY_NODES: usize = 64;

/// `∂ⁿσ(z)` for `n = 0..=n_max` by Cauchy-integral differentiation.
///
/// The circle radius is `0.25·min(1, Im τ)`; σ is entire so the circle may
/// pass anywhere.
pub fn sigma_z_derivs(z: Complex64, n_max: usize, data: &EllipticData) -> Result<Vec<Complex64>> {
    if n_max > MAX_SIGMA_DERIV_ORDER {
        return Err(Error::UnsupportedOrder(n_max));
    }
    let radius = 0.25 * data.tau.im.min(1.0);
    Ok(cauchy_derivatives(|w| data.sigma(w), z, radius, n_max, CAUCHY_NODES)
        .into_iter()
        .enumerate()
        .map(|(n, d)| if n == 0 { data.sigma(z) } else { d })
        .collect())
}

/// Taylor derivatives `f⁽ⁿ⁾(z)`, `n = 0..=n_max`, of a function analytic on
/// the closed disk of the given radius, via the trapezoidal rule on its
/// boundary circle.
pub fn cauchy_derivatives<F>(f: F, z: Complex64, radius: f64, n_max: usize, nodes: usize) -> Vec<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    let samples: Vec<Complex64> = (0..nodes)
        .map(|j| {
            let root = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / nodes as f64);
            f(z + radius * root)
        })
        .collect();
    taylor_from_circle(&samples, radius, n_max)
}

/// Converts equispaced samples on a circle into derivatives at its centre.
pub(crate) fn taylor_from_circle(samples: &[Complex64], radius: f64, n_max: usize) -> Vec<Complex64> {
    let nodes = samples.len();
    let mut factorial = 1.0;
    (0..=n_max)
        .map(|n| {
            if n > 0 {
                factorial *= n as f64;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &s) in samples.iter().enumerate() {
                let angle = -2.0 * PI * ((j * n) % nodes) as f64 / nodes as f64;
                acc += s * Complex64::from_polar(1.0, angle);
            }
            acc * factorial / (nodes as f64 * radius.powi(n as i32))
        })
        .collect()
}

/// The constants with `∫₀¹(℘ - c₁)dz = 0` and `∫₀^τ(℘ - c₂)dz = 0`.
pub fn c_constants(data: &EllipticData) -> (Complex64, Complex64) {
    (-2.0 * data.eta1, -2.0 * data.eta2 / data.tau)
}

//! The elliptic Calogero-Moser flow.
//!
//! Phase space: positions `xᵢ ∈ E = C/(Z + τZ)` and complex momenta `qᵢ`,
//! with Hamiltonian
//!
//! ```text
//! H = ½ Σ qᵢ² − 2 Σ_{i≠j} ℘(xᵢ − xⱼ)        (sum over ordered pairs)
//! ```
//!
//! whose Hamilton equations are `ẋᵢ = qᵢ`, `q̇ᵢ = 4 Σ_{j≠i} ℘′(xᵢ − xⱼ)`.


mod baker;
mod integrate;
mod lax;

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::elliptic::EllipticData;
use crate::error::{Error, Result};


pub use baker::{ba_pde_residual, ba_solution, bloch_spread, BakerAkhiezer, BakerSlice, GridSpec, TimeSlice, WaveFunction};
pub use integrate::{integrate, integrate_with, IntegrateOptions, Trajectory, TrajectoryStats};
pub use lax::{
    calibrate_lax, lax_pair, lax_residual, lax_residual_with, CalibrationReport, Commutator, LaxMatrices,
    LAX_ORIENTATION,
};

pub const DEFAULT_COLLISION_THRESHOLD: f64 = 1e-4;

/// Force prefactor obtained from the Hamiltonian: `q̇ᵢ = 4 Σ ℘′(xᵢ − xⱼ)`.
pub const LITERAL_FORCE_FACTOR: f64 = 4.0;

/// A point of phase space. Positions are stored reduced modulo the lattice.
#[derive(Debug, Clone)]
pub struct PhasePoint {
    x: Vec<Complex64>,
    q: Vec<Complex64>,
    data: Arc<EllipticData>,
}

impl PhasePoint {
    pub fn new(x: Vec<Complex64>, q: Vec<Complex64>, data: Arc<EllipticData>) -> Result<Self> {
        Self::with_threshold(x, q, data, DEFAULT_COLLISION_THRESHOLD)
    }

    pub fn with_threshold(x: Vec<Complex64>, q: Vec<Complex64>, data: Arc<EllipticData>, threshold: f64) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Domain("need at least one particle".into()));
        }
        if x.len() != q.len() {
            return Err(Error::Domain(format!("{} positions but {} momenta", x.len(), q.len())));
        }
        if let Some((i, j, separation)) = closest_pair(&x, &data) {
            if separation < threshold {
                return Err(Error::Collision { i, j, separation, at_time: None });
            }
        }
        let x = x.into_iter().map(|xi| data.reduce_mod_lattice(xi)).collect();
        Ok(Self { x, q, data })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }
    pub fn x(&self) -> &[Complex64] {
        &self.x
    }
    pub fn q(&self) -> &[Complex64] {
        &self.q
    }
    pub fn data(&self) -> &Arc<EllipticData> {
        &self.data
    }

    /// Same state with every position shifted by `shift`.
    pub fn translated(&self, shift: Complex64) -> Result<Self> {
        Self::new(self.x.iter().map(|x| x + shift).collect(), self.q.clone(), self.data.clone())
    }

    /// Same positions with momenta negated (time reversal).
    pub fn reversed(&self) -> Self {
        Self {
            x: self.x.clone(),
            q: self.q.iter().map(|q| -q).collect(),
            data: self.data.clone(),
        }
    }

    /// Smallest pairwise separation on the torus, with the pair attaining it.
    pub fn min_separation(&self) -> Option<(usize, usize, f64)> {
        closest_pair(&self.x, &self.data)
    }
}

fn closest_pair(x: &[Complex64], data: &EllipticData) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..x.len() {
        for j in 0..i {
            let d = data.torus_distance(x[i] - x[j]);
            if best.is_none_or(|b| d < b.2) {
                best = Some((j, i, d));
            }
        }
    }
    best
}

/// A seeded state near the `N`-torsion points `j(1 + τ)/N` (an
/// equilibrium of the flow): displacements up to `0.02`, momentum
/// components up to `0.1`.
pub fn sample_state<R: Rng>(n: usize, data: &Arc<EllipticData>, rng: &mut R) -> Result<PhasePoint> {
    let step = (1.0 + data.tau()) / n as f64;
    let x = (0..n)
        .map(|j| {
            let r = 0.02 * rng.gen::<f64>().sqrt();
            let theta = rng.gen::<f64>() * std::f64::consts::TAU;
            step * j as f64 + Complex64::from_polar(r, theta)
        })
        .collect();
    let q = (0..n).map(|_| Complex64::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1))).collect();
    PhasePoint::new(x, q, data.clone())
}

const TAME_SEPARATION: f64 = 0.2;
const TAME_MOMENTUM: f64 = 3.0;
const MAX_DRAWS: usize = 200;

/// Draws [`sample_state`]s until one whose flow over `[0, t_end]` (checked
/// at step `1e-2`) keeps pairwise separations above `0.2` and momenta below
/// `3`.
///
/// The potential attracts along both lattice directions and the torsion
/// equilibrium is generally unstable, so unfiltered draws regularly pass
/// close to a collision within unit time.
pub fn sample_tame_state<R: Rng>(n: usize, data: &Arc<EllipticData>, t_end: f64, rng: &mut R) -> Result<PhasePoint> {
    for _ in 0..MAX_DRAWS {
        let s = sample_state(n, data, rng)?;
        let mut opts = IntegrateOptions::new(t_end, 1e-2);
        opts.collision_threshold = TAME_SEPARATION;
        let Ok(tr) = integrate_with(&s, &opts) else { continue };
        let fast = tr.states.iter().any(|p| p.q().iter().any(|q| q.norm() > TAME_MOMENTUM));
        if !fast {
            return Ok(s);
        }
    }
    Err(Error::Search(format!("no tame {n}-particle state in {MAX_DRAWS} draws")))
}

/// `H = ½ Σ qᵢ² − 2 Σ_{i≠j} ℘(xᵢ − xⱼ)`.
pub fn hamiltonian(s: &PhasePoint) -> Result<Complex64> {
    let kinetic: Complex64 = s.q.iter().map(|q| q * q).sum::<Complex64>() / 2.0;
    let mut potential = Complex64::new(0.0, 0.0);
    for i in 0..s.n() {
        for j in 0..s.n() {
            if i != j {
                potential += s.data.wp(s.x[i] - s.x[j]).map_err(|_| collision(s, i, j))?;
            }
        }
    }
    Ok(kinetic - 2.0 * potential)
}

fn collision(s: &PhasePoint, i: usize, j: usize) -> Error {
    Error::Collision {
        i,
        j,
        separation: s.data.torus_distance(s.x[i] - s.x[j]),
        at_time: None,
    }
}

/// Forces `factor · Σ_{j≠i} ℘′(xᵢ − xⱼ)` at raw (possibly unreduced) positions.
pub(crate) fn forces(x: &[Complex64], data: &EllipticData, factor: f64) -> Result<Vec<Complex64>> {
    let n = x.len();
    let mut f = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        for j in 0..i {
            let w = data.wp_prime(x[i] - x[j]).map_err(|_| Error::Collision {
                i: j,
                j: i,
                separation: data.torus_distance(x[i] - x[j]),
                at_time: None,
            })?;
            // ℘′ is odd
            f[i] += factor * w;
            f[j] -= factor * w;
        }
    }
    Ok(f)
}

/// Hamilton's equations: `(ẋ, q̇) = (q, 4 Σ ℘′(xᵢ − xⱼ))`.
pub fn eom_rhs(s: &PhasePoint) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    eom_rhs_with(s, LITERAL_FORCE_FACTOR)
}

/// Right-hand side with an arbitrary force prefactor (calibration scans).
pub fn eom_rhs_with(s: &PhasePoint, factor: f64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    Ok((s.q.clone(), forces(&s.x, &s.data, factor)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::lattice_invariants;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn data() -> Arc<EllipticData> {
        Arc::new(lattice_invariants(c(0.1, 1.05)).unwrap())
    }

    #[test]
    fn free_particle_energy() {
        let s = PhasePoint::new(vec![c(0.2, 0.3)], vec![c(3.0, 1.0)], data()).unwrap();
        let h = hamiltonian(&s).unwrap();
        assert!((h - c(3.0, 1.0) * c(3.0, 1.0) / 2.0).norm() < 1e-14);
        let (dx, dq) = eom_rhs(&s).unwrap();
        assert_eq!(dx, vec![c(3.0, 1.0)]);
        assert_eq!(dq, vec![c(0.0, 0.0)]);
    }

    #[test]
    fn swap_symmetry_and_direct_sum() {
        let d = data();
        let (x1, x2) = (c(0.1, 0.2), c(-0.3, 0.5));
        let (q1, q2) = (c(0.4, -0.1), c(-0.7, 0.2));
        let a = PhasePoint::new(vec![x1, x2], vec![q1, q2], d.clone()).unwrap();
        let b = PhasePoint::new(vec![x2, x1], vec![q2, q1], d.clone()).unwrap();
        let ha = hamiltonian(&a).unwrap();
        assert!((ha - hamiltonian(&b).unwrap()).norm() < 1e-13);
        let direct = (q1 * q1 + q2 * q2) / 2.0 - 2.0 * (d.wp(x1 - x2).unwrap() + d.wp(x2 - x1).unwrap());
        assert!((ha - direct).norm() < 1e-12);
    }

    #[test]
    fn half_period_separation_has_no_force() {
        let d = data();
        let s = PhasePoint::new(vec![c(0.1, 0.1), c(0.6, 0.1)], vec![c(0.3, 0.0), c(0.0, 0.2)], d).unwrap();
        let (_, dq) = eom_rhs(&s).unwrap();
        assert!(dq.iter().all(|f| f.norm() < 1e-10), "{dq:?}");
    }

    #[test]
    fn forces_are_minus_gradient() {
        let d = data();
        let x = vec![c(0.1, 0.2), c(-0.3, 0.5), c(0.35, -0.3)];
        let q = vec![c(0.4, -0.1), c(-0.7, 0.2), c(0.1, 0.1)];
        let s = PhasePoint::new(x.clone(), q.clone(), d.clone()).unwrap();
        let (_, dq) = eom_rhs(&s).unwrap();
        let h = 1e-5;
        for i in 0..3 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let hp = hamiltonian(&PhasePoint::new(xp, q.clone(), d.clone()).unwrap()).unwrap();
            let hm = hamiltonian(&PhasePoint::new(xm, q.clone(), d.clone()).unwrap()).unwrap();
            let grad = (hp - hm) / (2.0 * h);
            assert!((dq[i] + grad).norm() < 1e-6 * dq[i].norm().max(1.0), "{} vs {}", dq[i], -grad);
        }
    }

    #[test]
    fn collision_rejected() {
        let d = data();
        let r = PhasePoint::new(vec![c(0.1, 0.1), c(1.1 + 1e-5, 0.1)], vec![c(0.0, 0.0); 2], d);
        assert!(matches!(r, Err(Error::Collision { .. })));
    }
}

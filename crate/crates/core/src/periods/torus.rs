use std::sync::Arc;

use num_complex::Complex64;

use crate::elliptic::EllipticData;
use crate::error::{Error, Result};
use crate::quadrature::{segment_integral, Segment};

type C = Complex64;

/// `Ψ = (s·℘(z) + b) dz` with `s ∈ {1, i}`.
#[derive(Debug, Clone)]
pub struct TorusDifferential {
    pub data: Arc<EllipticData>,
    pub b: C,
    pub scale: C,
}

impl TorusDifferential {
    pub fn density(&self, z: C) -> Result<C> {
        Ok(self.scale * self.data.wp(z)? + self.b)
    }

    /// Periods over `[z, z + 1]` and `[z, z + τ]`.
    pub fn periods(&self) -> (C, C) {
        let d = &self.data;
        (-2.0 * self.scale * d.eta1() + self.b, -2.0 * self.scale * d.eta2() + self.b * d.tau())
    }

    /// `−b/s`: the value of `℘` at the zeros.
    pub fn wp_level(&self) -> C {
        -self.b / self.scale
    }
}

/// `Ψ₁`, `Ψ₂` with singular parts `dz/z²`, `i dz/z²` and real periods.
pub fn torus_real_basis(data: &Arc<EllipticData>) -> (TorusDifferential, TorusDifferential) {
    let tau = data.tau();
    let solve = |scale: C| {
        // Im b = Im(2sη₁);  Re b·Im τ + Im b·Re τ = Im(2sη₂)
        let im_b = (2.0 * scale * data.eta1()).im;
        let re_b = ((2.0 * scale * data.eta2()).im - im_b * tau.re) / tau.im;
        TorusDifferential { data: data.clone(), b: C::new(re_b, im_b), scale }
    };
    (solve(C::new(1.0, 0.0)), solve(C::new(0.0, 1.0)))
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TorusZeros {
    /// Reduced to the centred cell, sorted.
    pub zeros: Vec<C>,
    /// The level is a critical value of `℘`; the zero is double.
    pub double: bool,
}

const NEWTON_ITERS: usize = 60;

fn newton_wp(data: &EllipticData, level: C, mut z: C) -> Option<C> {
    for _ in 0..NEWTON_ITERS {
        let f = data.wp(z).ok()? - level;
        let df = data.wp_prime(z).ok()?;
        if df.norm() == 0.0 {
            return None;
        }
        let step = f / df;
        let step = if step.norm() > 0.2 { step * (0.2 / step.norm()) } else { step };
        z -= step;
        if step.norm() < 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    let z = data.reduce_mod_lattice(z);
    ((data.wp(z).ok()? - level).norm() < 1e-9 * (1.0 + level.norm())).then_some(z)
}

pub fn torus_zeros(psi: &TorusDifferential) -> Result<TorusZeros> {
    let data = &psi.data;
    let tau = data.tau();
    let level = psi.wp_level();
    let halves = [C::new(0.5, 0.0), tau / 2.0, (1.0 + tau) / 2.0];
    for h in halves {
        if (data.wp(h)? - level).norm() < 1e-8 {
            return Ok(TorusZeros { zeros: vec![data.reduce_mod_lattice(h)], double: true });
        }
    }
    let mut starts: Vec<C> = (0..8)
        .map(|j| {
            let (s, t) = ((j % 4) as f64 * 0.25 + 0.125, (j / 4) as f64 * 0.5 + 0.25);
            C::new(s - 0.5, 0.0) + tau * (t - 0.5)
        })
        .collect();
    for attempt in 0..2 {
        let mut zeros: Vec<C> = Vec::new();
        for &s in &starts {
            if let Some(z) = newton_wp(data, level, s) {
                if zeros.iter().all(|&w| data.torus_distance(w - z) > 1e-7) {
                    zeros.push(z);
                }
            }
        }
        if zeros.len() == 2 {
            zeros.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
            return Ok(TorusZeros { zeros, double: false });
        }
        if attempt == 0 {
            starts = (0..36)
                .map(|j| C::new((j % 6) as f64 / 6.0 - 0.45, 0.0) + tau * ((j / 6) as f64 / 6.0 - 0.45))
                .collect();
        }
    }
    Err(Error::Search(format!("could not find both zeros of ℘ − {level}")))
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct BaseCaseReport {
    pub b1: C,
    pub b2: C,
    /// Largest `|Im|` over the four periods.
    pub max_imag_period: f64,
    /// Smallest torus distance between a zero of `Ψ₁` and one of `Ψ₂`.
    pub zero_gap: f64,
    /// `|−b₁ − (−b₂/i)|`.
    pub level_gap: f64,
    /// `|b₁ + i b₂|`: the holomorphic combination `Ψ₁ + iΨ₂`.
    pub holomorphic_coefficient: f64,
    pub pass: bool,
}

pub fn base_case_check(data: &Arc<EllipticData>) -> Result<BaseCaseReport> {
    let (p1, p2) = torus_real_basis(data);
    base_case_check_pair(&p1, &p2)
}

/// The base-case check on an arbitrary pair, so that invalid pairs can be
/// shown to fail.
pub fn base_case_check_pair(psi1: &TorusDifferential, psi2: &TorusDifferential) -> Result<BaseCaseReport> {
    let data = &psi1.data;
    let (a1, b1) = psi1.periods();
    let (a2, b2) = psi2.periods();
    let max_imag_period = [a1, b1, a2, b2].iter().map(|p| p.im.abs()).fold(0.0, f64::max);
    let z1 = torus_zeros(psi1)?;
    let z2 = torus_zeros(psi2)?;
    let mut zero_gap = f64::INFINITY;
    for &u in &z1.zeros {
        for &v in &z2.zeros {
            zero_gap = zero_gap.min(data.torus_distance(u - v));
        }
    }
    let level_gap = (psi1.wp_level() - psi2.wp_level()).norm();
    let holomorphic_coefficient = (psi1.b + C::new(0.0, 1.0) * psi2.b).norm();
    Ok(BaseCaseReport {
        b1: psi1.b,
        b2: psi2.b,
        max_imag_period,
        zero_gap,
        level_gap,
        holomorphic_coefficient,
        pass: zero_gap > 1e-6 && level_gap > 1e-6,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum LeafEnd {
    ArcLength,
    /// Entered the guard disk around the pole.
    Pole,
    /// Came within the guard distance of a zero of `Ψ₁`; `zero` is refined
    /// from the stop point and reduced to the centred cell.
    Saddle { zero: C },
}

/// A piece of the leaf `Im F₁ = c` with `F₁ = ∫Ψ₁`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LevelSetPolyline {
    pub c_value: f64,
    /// Unreduced samples.
    pub points: Vec<C>,
    /// Arc parameter, equal to the gain of `Re F₁` along the flow.
    pub s: Vec<f64>,
    /// `F₁` relative to the start, from segment integrals of `Ψ₁`.
    pub f1: Vec<C>,
    pub closed_through_pole: bool,
    pub end: LeafEnd,
}

impl LevelSetPolyline {
    pub fn im_drift(&self) -> f64 {
        self.f1.iter().map(|f| f.im.abs()).fold(0.0, f64::max)
    }

    pub fn re_monotone(&self) -> bool {
        self.f1.windows(2).all(|w| w[1].re > w[0].re)
    }

    /// Largest `|Re F₁ − s|`.
    pub fn arc_mismatch(&self) -> f64 {
        self.f1.iter().zip(&self.s).map(|(f, s)| (f.re - s).abs()).fold(0.0, f64::max)
    }
}

const POLE_GUARD: f64 = 1e-2;
const SADDLE_GUARD: f64 = 1e-3;
const ARC_STEP: f64 = 1e-3;

/// Follows `dz/ds = 1/ψ₁(z)`, along which `dF₁/ds = 1`.
pub fn trace_level_set(psi1: &TorusDifferential, start: C, arc_length: f64) -> Result<LevelSetPolyline> {
    let data = psi1.data.clone();
    let zeros = torus_zeros(psi1)?.zeros;
    let near_zero = |z: C| {
        zeros
            .iter()
            .map(|&w| (w, data.torus_distance(z - w)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
    };
    if data.torus_distance(start) < POLE_GUARD || near_zero(start).1 < SADDLE_GUARD {
        return Err(Error::Domain(format!("leaf start {start} sits on a zero or the pole of the differential")));
    }
    let v = |z: C| -> Result<C> { Ok(1.0 / psi1.density(z)?) };
    let f_start = C::new(0.0, 0.0);
    let mut out = LevelSetPolyline {
        c_value: 0.0,
        points: vec![start],
        s: vec![0.0],
        f1: vec![f_start],
        closed_through_pole: false,
        end: LeafEnd::ArcLength,
    };
    let (mut z, mut s, mut f) = (start, 0.0, f_start);
    while s < arc_length {
        // keep the z-step below a quarter of the distance to the nearest zero
        let speed = v(z)?.norm();
        let (_, dist) = near_zero(z);
        let mut h = ARC_STEP.min(arc_length - s);
        if speed * h > 0.25 * dist {
            h = 0.25 * dist / speed;
        }
        let k1 = v(z)?;
        let k2 = v(z + k1 * (h / 2.0))?;
        let k3 = v(z + k2 * (h / 2.0))?;
        let k4 = v(z + k3 * h)?;
        let next = z + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0);
        f += segment_integral(|w| psi1.density(w), &Segment::new(z, next)?, 1e-14)?;
        z = next;
        s += h;
        out.points.push(z);
        out.s.push(s);
        out.f1.push(f);
        if data.torus_distance(z) < POLE_GUARD {
            out.closed_through_pole = true;
            out.end = LeafEnd::Pole;
            break;
        }
        let (w, dist) = near_zero(z);
        if dist < SADDLE_GUARD {
            // report the zero located from the stop point itself
            let zero = newton_wp(&data, psi1.wp_level(), z).unwrap_or(w);
            out.end = LeafEnd::Saddle { zero };
            break;
        }
    }
    Ok(out)
}

/// A point on the critical leaf that flows into `zero`, with
/// `F₁(start) − F₁(zero) = −gap`.
pub fn critical_leaf_start(psi1: &TorusDifferential, zero: C, gap: f64) -> Result<C> {
    let data = &psi1.data;
    // F₁ − F₁(z₀) ≈ s℘′(z₀) δ²/2
    let curvature = psi1.scale * data.wp_prime(zero)?;
    let mut w = zero + (-2.0 * gap / curvature).sqrt();
    for _ in 0..30 {
        let f = segment_integral(|u| psi1.density(u), &Segment::new(zero, w)?, 1e-14)? + gap;
        let step = f / psi1.density(w)?;
        w -= step;
        if step.norm() < 1e-15 {
            break;
        }
    }
    let f = segment_integral(|u| psi1.density(u), &Segment::new(zero, w)?, 1e-14)? + gap;
    if f.norm() > 1e-12 {
        return Err(Error::Search(format!("critical leaf start residual {:e}", f.norm())));
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::lattice_invariants;
    use crate::quadrature::segment_integral;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn square() -> Arc<EllipticData> {
        Arc::new(lattice_invariants(c(0.0, 1.0)).unwrap())
    }

    #[test]
    fn square_torus_basis() {
        let (p1, p2) = torus_real_basis(&square());
        assert!((p1.b - c(-PI, 0.0)).norm() < 1e-10, "{}", p1.b);
        assert!((p2.b - c(0.0, PI)).norm() < 1e-10, "{}", p2.b);
        let (a, b) = p1.periods();
        assert!((a - c(-2.0 * PI, 0.0)).norm() < 1e-10 && b.norm() < 1e-10);
        let (a, b) = p2.periods();
        assert!(a.norm() < 1e-10 && (b - c(-2.0 * PI, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn periods_match_quadrature() {
        let d = Arc::new(lattice_invariants(c(0.23, 0.87)).unwrap());
        let (p1, p2) = torus_real_basis(&d);
        for p in [&p1, &p2] {
            let base = c(0.0, 0.31);
            let a = segment_integral(|z| p.density(z), &Segment::new(base - 0.5, base + 0.5).unwrap(), 1e-12).unwrap();
            let shift = c(0.37, 0.0) - d.tau() / 2.0;
            let b = segment_integral(|z| p.density(z), &Segment::new(shift, shift + d.tau()).unwrap(), 1e-12).unwrap();
            let (ea, eb) = p.periods();
            assert!((a - ea).norm() < 1e-9 && (b - eb).norm() < 1e-9);
            assert!(a.im.abs() < 1e-9 && b.im.abs() < 1e-9);
        }
        // perturbing b loses reality of some period
        let mut q = p1.clone();
        q.b += c(0.0, 1e-3);
        assert!(q.periods().0.im.abs() > 1e-4);
        let mut q = p1.clone();
        q.b += c(1e-3, 0.0);
        assert!(q.periods().1.im.abs() > 1e-4);
    }

    #[test]
    fn zeros_are_symmetric_pairs() {
        let d = square();
        let (p1, p2) = torus_real_basis(&d);
        for p in [&p1, &p2] {
            let z = torus_zeros(p).unwrap();
            assert!(!z.double);
            assert_eq!(z.zeros.len(), 2);
            assert!(d.torus_distance(z.zeros[0] + z.zeros[1]) < 1e-9);
            for &w in &z.zeros {
                assert!((d.wp(w).unwrap() - p.wp_level()).norm() < 1e-9);
            }
        }
        assert!((p1.wp_level() - c(PI, 0.0)).norm() < 1e-10);
        assert!((p2.wp_level() - c(-PI, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn base_case_and_its_teeth() {
        let d = square();
        let r = base_case_check(&d).unwrap();
        assert!(r.pass && (r.level_gap - 2.0 * PI).abs() < 1e-9, "{r:?}");
        let (p1, _) = torus_real_basis(&d);
        let fake = TorusDifferential { data: d.clone(), b: c(0.0, 1.0) * p1.b, scale: c(0.0, 1.0) };
        let r = base_case_check_pair(&p1, &fake).unwrap();
        assert!(!r.pass && r.zero_gap < 1e-9);
    }

    #[test]
    fn generic_leaf_is_a_level_set() {
        let (p1, _) = torus_real_basis(&square());
        let leaf = trace_level_set(&p1, c(0.31, 0.22), 0.5).unwrap();
        assert!(leaf.points.len() > 100);
        assert!(leaf.re_monotone());
        assert!(leaf.im_drift() < 1e-6, "{}", leaf.im_drift());
        assert!(leaf.arc_mismatch() < 1e-6, "{}", leaf.arc_mismatch());
    }

    #[test]
    fn critical_leaf_runs_into_the_zero() {
        let d = square();
        let (p1, _) = torus_real_basis(&d);
        let z0 = torus_zeros(&p1).unwrap().zeros[0];
        let start = critical_leaf_start(&p1, z0, 0.01).unwrap();
        let leaf = trace_level_set(&p1, start, 5.0).unwrap();
        match leaf.end {
            LeafEnd::Saddle { zero } => assert!(d.torus_distance(zero - z0) < 1e-9),
            other => panic!("leaf ended with {other:?}"),
        }
        assert!(leaf.im_drift() < 1e-6);
    }
}

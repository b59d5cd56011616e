use num_complex::Complex64;

use super::CurveSpec;
use crate::error::{Error, Result};
use crate::poly;

/// Largest z-step taken while continuing roots.
const MAX_STEP: f64 = 0.02;
const MIN_STEP: f64 = 1e-9;
const GAP_FLOOR: f64 = 1e-6;

/// A closed path on the torus, stored as an unreduced polyline whose end
/// differs from its start by a lattice vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BasePath {
    vertices: Vec<Complex64>,
}

impl BasePath {
    /// `z* → z* + a → z* + a + bτ`.
    pub fn word(basepoint: Complex64, a: i64, b: i64, tau: Complex64) -> Self {
        let mut vertices = vec![basepoint];
        let mid = basepoint + a as f64;
        if a != 0 {
            vertices.push(mid);
        }
        if b != 0 {
            vertices.push(mid + tau * b as f64);
        }
        Self { vertices }
    }

    /// A closed polygon; the first vertex is repeated at the end.
    pub fn polygon(mut vertices: Vec<Complex64>) -> Self {
        if let Some(&first) = vertices.first() {
            if vertices.last() != Some(&first) || vertices.len() == 1 {
                vertices.push(first);
            }
        }
        Self { vertices }
    }

    /// Arbitrary polyline; the caller guarantees closure on the torus.
    pub fn from_vertices(vertices: Vec<Complex64>) -> Self {
        Self { vertices }
    }

    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }

    pub fn start(&self) -> Complex64 {
        self.vertices[0]
    }

    /// `end − start`, a lattice vector.
    pub fn shift(&self) -> Complex64 {
        self.vertices[self.vertices.len() - 1] - self.vertices[0]
    }

    pub fn reversed(&self) -> Self {
        Self { vertices: self.vertices.iter().rev().copied().collect() }
    }

    /// Integer class `(a, b)` of the path in the homology of the torus.
    pub fn class(&self, tau: Complex64) -> (i64, i64) {
        let s = self.shift();
        let b = (s.im / tau.im).round();
        ((s.re - b * tau.re).round() as i64, b as i64)
    }
}

/// All `N` roots continued along a path.
#[derive(Debug, Clone)]
pub struct TrackedPath {
    pub z: Vec<Complex64>,
    /// `k[step][sheet]`; sheets are labelled by the sorted roots at the start.
    pub k: Vec<Vec<Complex64>>,
    /// Smallest root separation met along the way.
    pub min_gap: f64,
}

impl TrackedPath {
    /// `perm[s]`: the sheet on which a lift starting on sheet `s` ends.
    pub fn permutation(&self, curve: &CurveSpec) -> Result<Vec<usize>> {
        let start = &self.k[0];
        let end = self.k.last().unwrap();
        let _ = curve;
        let mut perm = Vec::with_capacity(end.len());
        for (s, ke) in end.iter().enumerate() {
            let (j, d) = start
                .iter()
                .enumerate()
                .map(|(j, ks)| (j, (ks - ke).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            if d > 1e-6 * (1.0 + ke.norm()) {
                return Err(Error::Tracking(format!("sheet {s} ends {d:.2e} away from every starting root")));
            }
            if perm.contains(&j) {
                return Err(Error::Tracking(format!("two sheets end on starting root {j}")));
            }
            perm.push(j);
        }
        Ok(perm)
    }
}

fn matched(prev: &[Complex64], next: &[Complex64]) -> bool {
    let gap = poly::min_gap(prev);
    if prev.len() < 2 {
        return true;
    }
    if poly::min_gap(next) < GAP_FLOOR {
        return false;
    }
    prev.iter().zip(next).all(|(p, q)| (p - q).norm() < 0.25 * gap)
}

/// Continues every root of `R(·, z)` along the path, halving the step
/// whenever the root correspondence would be ambiguous.
pub fn track_path(curve: &CurveSpec, path: &BasePath) -> Result<TrackedPath> {
    let z0 = path.start();
    let mut roots = curve.roots(z0)?;
    let mut out = TrackedPath { z: vec![z0], k: vec![roots.clone()], min_gap: poly::min_gap(&roots) };
    for edge in path.vertices().windows(2) {
        let (u, v) = (edge[0], edge[1]);
        let len = (v - u).norm();
        if len == 0.0 {
            continue;
        }
        let mut s = 0.0;
        let mut ds = (MAX_STEP / len).min(1.0);
        while s < 1.0 {
            let step = ds.min(1.0 - s);
            let z = u + (v - u) * (s + step);
            let next = poly::roots_from(&curve.coefficients(z)?, roots.clone())?;
            if matched(&roots, &next) {
                s += step;
                roots = next;
                out.min_gap = out.min_gap.min(poly::min_gap(&roots));
                out.z.push(z);
                out.k.push(roots.clone());
                ds = (ds * 1.5).min(MAX_STEP / len);
            } else {
                ds /= 2.0;
                if ds * len < MIN_STEP {
                    return Err(Error::BranchPoint { z, gap: poly::min_gap(&next) });
                }
            }
        }
    }
    Ok(out)
}

/// Sheet permutation induced by a closed path.
pub fn loop_permutation(curve: &CurveSpec, path: &BasePath) -> Result<Vec<usize>> {
    track_path(curve, path)?.permutation(curve)
}

/// The lift of the word `(a, b)` at `basepoint` starting on `sheet`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftedLoop {
    pub a: i64,
    pub b: i64,
    pub basepoint: Complex64,
    pub sheet: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackResult {
    /// Arrival sheet.
    pub sheet: usize,
    pub k_start: Complex64,
    pub k_end: Complex64,
    pub permutation: Vec<usize>,
}

pub fn sheet_track(curve: &CurveSpec, lp: &LiftedLoop) -> Result<TrackResult> {
    if lp.sheet >= curve.n() {
        return Err(Error::Domain(format!("sheet {} of {}", lp.sheet, curve.n())));
    }
    let path = BasePath::word(lp.basepoint, lp.a, lp.b, curve.data().tau());
    let tracked = track_path(curve, &path)?;
    let permutation = tracked.permutation(curve)?;
    Ok(TrackResult {
        sheet: permutation[lp.sheet],
        k_start: tracked.k[0][lp.sheet],
        k_end: tracked.k.last().unwrap()[lp.sheet],
        permutation,
    })
}

/// A closed cycle on the curve: the base path repeated until the starting
/// sheet returns.
#[derive(Debug, Clone)]
pub struct LiftedCycle {
    pub path: BasePath,
    pub start_sheet: usize,
    pub repeats: usize,
    /// Unreduced base points of the whole cycle.
    pub z: Vec<Complex64>,
    pub k: Vec<Complex64>,
}

impl LiftedCycle {
    /// `k` at the end minus `k` at the start; zero for a closed lift.
    pub fn k_jump(&self) -> Complex64 {
        self.k[self.k.len() - 1] - self.k[0]
    }
}

pub fn lift_cycle(curve: &CurveSpec, path: &BasePath, sheet: usize) -> Result<LiftedCycle> {
    let n = curve.n();
    if sheet >= n {
        return Err(Error::Domain(format!("sheet {sheet} of {n}")));
    }
    let tracked = track_path(curve, path)?;
    let perm = tracked.permutation(curve)?;
    let shift = path.shift();
    let mut z = vec![tracked.z[0]];
    let mut k = vec![tracked.k[0][sheet]];
    let mut current = sheet;
    let mut repeats = 0;
    loop {
        let offset = shift * repeats as f64;
        for (zs, ks) in tracked.z.iter().zip(&tracked.k).skip(1) {
            z.push(zs + offset);
            k.push(ks[current]);
        }
        repeats += 1;
        current = perm[current];
        if current == sheet {
            break;
        }
        if repeats > n {
            return Err(Error::Inconsistent(n));
        }
    }
    Ok(LiftedCycle { path: path.clone(), start_sheet: sheet, repeats, z, k })
}

fn cross(u: Complex64, v: Complex64) -> f64 {
    u.re * v.im - u.im * v.re
}

/// Signed intersection number of two lifted cycles, counting transverse
/// crossings of the base paths on the torus where both lifts sit on the
/// same sheet. A crossing counts `+1` when the second cycle passes from
/// right to left of the first.
pub fn cycle_intersection(curve: &CurveSpec, first: &LiftedCycle, second: &LiftedCycle) -> Result<i64> {
    let data = curve.data();
    let tau = data.tau();
    let reduce = |z: &[Complex64]| -> Vec<(Complex64, Complex64, usize)> {
        z.windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (r, m, n) = data.reduce(w[0]);
                let _ = r;
                let shift = data.lattice_point(m, n);
                (w[0] - shift, w[1] - shift, i)
            })
            .collect()
    };
    let sa = reduce(&first.z);
    let sb = reduce(&second.z);
    let mut total = 0;
    for &(a0, a1, ia) in &sa {
        let d1 = a1 - a0;
        let (lo_re, hi_re) = (a0.re.min(a1.re), a0.re.max(a1.re));
        let (lo_im, hi_im) = (a0.im.min(a1.im), a0.im.max(a1.im));
        for &(b0, b1, ib) in &sb {
            for m in -1..=1 {
                for n in -1..=1 {
                    let t = m as f64 + tau * n as f64;
                    let (c0, c1) = (b0 + t, b1 + t);
                    if c0.re.max(c1.re) < lo_re || c0.re.min(c1.re) > hi_re || c0.im.max(c1.im) < lo_im || c0.im.min(c1.im) > hi_im {
                        continue;
                    }
                    let d2 = c1 - c0;
                    let det = cross(d1, d2);
                    if det.abs() < 1e-14 * d1.norm() * d2.norm() {
                        continue;
                    }
                    let s = cross(c0 - a0, d2) / det;
                    let u = cross(c0 - a0, d1) / det;
                    if !(0.0..1.0).contains(&s) || !(0.0..1.0).contains(&u) {
                        continue;
                    }
                    let ka = first.k[ia] + (first.k[ia + 1] - first.k[ia]) * s;
                    let kb = second.k[ib] + (second.k[ib + 1] - second.k[ib]) * u;
                    let roots = curve.roots(a0 + d1 * s)?;
                    let nearest = |k: Complex64| {
                        (0..roots.len()).min_by(|&x, &y| (roots[x] - k).norm().total_cmp(&(roots[y] - k).norm())).unwrap()
                    };
                    if nearest(ka) == nearest(kb) {
                        total += det.signum() as i64;
                    }
                }
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{sample_tame_state, PhasePoint};
    use crate::elliptic::{lattice_invariants, EllipticData};
    use crate::spectral::curve_from_h;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn data() -> Arc<EllipticData> {
        Arc::new(lattice_invariants(c(0.1, 1.05)).unwrap())
    }

    fn curve(n: usize) -> CurveSpec {
        let s = sample_tame_state(n, &data(), 1.0, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        CurveSpec::det(s)
    }

    #[test]
    fn word_path_class() {
        let tau = c(0.1, 1.05);
        let p = BasePath::word(c(0.3, 0.4), 2, -1, tau);
        assert_eq!(p.class(tau), (2, -1));
        assert_eq!(BasePath::word(c(0.3, 0.4), 0, 0, tau).vertices().len(), 1);
    }

    #[test]
    fn trivial_and_single_sheet_loops() {
        let d = data();
        let one = CurveSpec::det(PhasePoint::new(vec![c(0.2, 0.1)], vec![c(0.6, -0.4)], d.clone()).unwrap());
        for (a, b) in [(1, 0), (0, 1), (2, -1)] {
            let r = sheet_track(&one, &LiftedLoop { a, b, basepoint: c(0.45, 0.5), sheet: 0 }).unwrap();
            assert_eq!(r.permutation, vec![0]);
        }
        let two = curve(2);
        let r = sheet_track(&two, &LiftedLoop { a: 0, b: 0, basepoint: c(0.45, 0.5), sheet: 1 }).unwrap();
        assert_eq!(r.permutation, vec![0, 1]);
    }

    #[test]
    fn reversed_loop_inverts_permutation() {
        let cv = curve(3);
        let tau = cv.data().tau();
        for (a, b) in [(1, 0), (0, 1), (1, 1)] {
            let p = BasePath::word(c(0.41, 0.47), a, b, tau);
            let fwd = loop_permutation(&cv, &p).unwrap();
            // the reversed path starts at the translated basepoint, where the
            // sorted labels coincide with those at the original basepoint
            let back = loop_permutation(&cv, &p.reversed()).unwrap();
            for s in 0..3 {
                assert_eq!(back[fwd[s]], s, "{fwd:?} {back:?}");
            }
        }
    }

    #[test]
    fn closed_lift_returns_to_its_k() {
        let cv = curve(2);
        let tau = cv.data().tau();
        for (a, b) in [(1, 0), (0, 1)] {
            for sheet in 0..2 {
                let cyc = lift_cycle(&cv, &BasePath::word(c(0.41, 0.47), a, b, tau), sheet).unwrap();
                assert!(cyc.k_jump().norm() < 1e-8);
                assert!((1..=2).contains(&cyc.repeats));
            }
        }
    }

    #[test]
    fn generators_act_transitively() {
        for n in 2..=3 {
            let cv = curve(n);
            let tau = cv.data().tau();
            let gens: Vec<Vec<usize>> = [(1, 0), (0, 1)]
                .iter()
                .map(|&(a, b)| loop_permutation(&cv, &BasePath::word(c(0.41, 0.47), a, b, tau)).unwrap())
                .collect();
            let mut orbit = vec![0];
            let mut i = 0;
            while i < orbit.len() {
                for g in &gens {
                    let next = g[orbit[i]];
                    if !orbit.contains(&next) {
                        orbit.push(next);
                    }
                }
                i += 1;
            }
            assert_eq!(orbit.len(), n, "{gens:?}");
        }
    }

    #[test]
    fn torus_cycles_meet_once() {
        let one = curve_from_h(&[c(0.3, 0.1)], data()).unwrap();
        let tau = one.data().tau();
        let alpha = lift_cycle(&one, &BasePath::word(c(-0.5, 0.3), 1, 0, tau), 0).unwrap();
        let beta = lift_cycle(&one, &BasePath::word(c(0.2, -0.5) - 0.5 * tau.re, 0, 1, tau), 0).unwrap();
        let ab = cycle_intersection(&one, &alpha, &beta).unwrap();
        let ba = cycle_intersection(&one, &beta, &alpha).unwrap();
        assert_eq!(ab.abs(), 1);
        assert_eq!(ab, -ba);
        assert_eq!(cycle_intersection(&one, &alpha, &alpha).unwrap(), 0);
    }
}

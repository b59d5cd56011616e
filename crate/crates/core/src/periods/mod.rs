//! Integer-period differentials on spectral curves and the real-period
//! differentials of the base torus.

mod torus;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::elliptic::c_constants;
use crate::error::{Error, Result};
use crate::quadrature::polyline_integral;
use crate::spectral::{
    curve_from_h, cycle_intersection, lift_cycle, singularity_census, BasePath, CensusOptions, CurveSpec, LiftedCycle,
    LiftedLoop,
};

pub use torus::{
    base_case_check, base_case_check_pair, critical_leaf_start, torus_real_basis, torus_zeros, trace_level_set, BaseCaseReport, LeafEnd,
    LevelSetPolyline, TorusDifferential, TorusZeros,
};

type C = Complex64;

const INTEGER_TOL: f64 = 1e-6;
const PERIOD_QUAD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Phi1,
    Phi2,
}

/// `Φ₁ = (dk − (℘ − c₁)dz)/2πi` or `Φ₂ = τ(dk − (℘ − c₂)dz)/2πi`.
#[derive(Debug, Clone)]
pub struct DifferentialOnCurve {
    curve: CurveSpec,
    which: Which,
    c: C,
}

impl DifferentialOnCurve {
    pub fn new(curve: CurveSpec, which: Which) -> Self {
        let (c1, c2) = c_constants(curve.data());
        let c = match which {
            Which::Phi1 => c1,
            Which::Phi2 => c2,
        };
        Self { curve, which, c }
    }

    pub fn curve(&self) -> &CurveSpec {
        &self.curve
    }
    pub fn which(&self) -> Which {
        self.which
    }
    pub fn c(&self) -> C {
        self.c
    }

    fn prefactor(&self) -> C {
        let p = match self.which {
            Which::Phi1 => C::new(1.0, 0.0),
            Which::Phi2 => self.curve.data().tau(),
        };
        p / C::new(0.0, 2.0 * PI)
    }

    /// Period over a closed lifted cycle.
    pub fn cycle_period(&self, cycle: &LiftedCycle) -> Result<C> {
        let data = self.curve.data().clone();
        let c = self.c;
        let base = polyline_integral(|z| Ok(data.wp(z)? - c), cycle.path.vertices(), 0.25, PERIOD_QUAD_TOL)?;
        Ok(self.prefactor() * (cycle.k_jump() - base * cycle.repeats as f64))
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct PeriodReport {
    pub a: i64,
    pub b: i64,
    pub sheet: usize,
    pub differential: Which,
    pub period: C,
    pub nearest_int: i64,
    pub deviation: f64,
    /// Repetitions of the base word needed to close the lift.
    pub repeats: usize,
}

impl PeriodReport {
    pub fn is_integer(&self) -> bool {
        self.deviation < INTEGER_TOL
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "loop": {"a": self.a, "b": self.b, "sheet": self.sheet},
            "differential": self.differential,
            "period": [self.period.re, self.period.im],
            "nearest_int": self.nearest_int,
            "deviation": self.deviation,
        })
    }
}

pub fn phi_period(diff: &DifferentialOnCurve, lp: &LiftedLoop) -> Result<PeriodReport> {
    let path = BasePath::word(lp.basepoint, lp.a, lp.b, diff.curve.data().tau());
    for seg in path.vertices().windows(2) {
        crate::quadrature::Segment::new(seg[0], seg[1])?.check_clearance(diff.curve.data())?;
    }
    let cycle = lift_cycle(&diff.curve, &path, lp.sheet)?;
    let period = diff.cycle_period(&cycle)?;
    let nearest = period.re.round();
    Ok(PeriodReport {
        a: lp.a,
        b: lp.b,
        sheet: lp.sheet,
        differential: diff.which,
        period,
        nearest_int: nearest as i64,
        deviation: (period - nearest).norm(),
        repeats: cycle.repeats,
    })
}

/// Lifted word loops from a common basepoint whose base paths stay at least
/// `clearance` away from the branch points and the pole.
pub fn word_loops(curve: &CurveSpec, words: &[(i64, i64)], sheet: usize, clearance: f64) -> Result<Vec<LiftedLoop>> {
    let data = curve.data();
    let tau = data.tau();
    let branch = singularity_census(curve, &CensusOptions::default())?.branch_points;
    let clear = |z: C| branch.iter().all(|&b| data.torus_distance(z - b) > clearance) && data.torus_distance(z) > clearance;
    for i in 0..12 {
        for j in 0..12 {
            let base = C::new(i as f64 / 12.0 + 0.013, 0.0) + tau * (j as f64 / 12.0 + 0.029);
            let ok = words.iter().all(|&(a, b)| {
                let path = BasePath::word(base, a, b, tau);
                path.vertices().windows(2).all(|w| (0..=100).all(|t| clear(w[0] + (w[1] - w[0]) * (t as f64 / 100.0))))
            });
            if ok {
                return Ok(words.iter().map(|&(a, b)| LiftedLoop { a, b, basepoint: base, sheet }).collect());
            }
        }
    }
    Err(Error::UnsupportedCurve(format!("no basepoint keeps the loops {clearance} clear of the branch points")))
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct DegreeReport {
    /// Number of roots of `R(·, z)` at a generic `z`.
    pub sheet_count: usize,
    /// `Σ (∫_a Φ₂ ∫_b Φ₁ − ∫_b Φ₂ ∫_a Φ₁)` over a homology basis, with the
    /// intersection form oriented so that `(1, 0)·(0, 1) = +1` on the torus.
    pub raw_period_sum: Option<C>,
    /// The same expression on the torus itself.
    pub torus_period_sum: Option<C>,
    /// `raw / torus`: independent of the orientation convention.
    pub period_sum: Option<f64>,
    pub deviation: Option<f64>,
    /// `|det J|` of the chosen cycles.
    pub intersection_det: Option<f64>,
}

/// `−P₂ᵀ J⁻¹ P₁`, which equals the period sum for a symplectic basis and
/// is invariant under change of basis.
fn period_sum(p1: &[C], p2: &[C], j: &DMatrix<f64>) -> Result<C> {
    let inv = j.clone().try_inverse().ok_or_else(|| Error::Consistency("singular intersection matrix".into()))?;
    let n = p1.len();
    let mut acc = C::new(0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            acc -= p2[a] * inv[(a, b)] * p1[b];
        }
    }
    Ok(acc)
}

fn periods_of(curve: &CurveSpec, cycles: &[LiftedCycle]) -> Result<(Vec<C>, Vec<C>)> {
    let phi1 = DifferentialOnCurve::new(curve.clone(), Which::Phi1);
    let phi2 = DifferentialOnCurve::new(curve.clone(), Which::Phi2);
    let p1 = cycles.iter().map(|c| phi1.cycle_period(c)).collect::<Result<_>>()?;
    let p2 = cycles.iter().map(|c| phi2.cycle_period(c)).collect::<Result<_>>()?;
    Ok((p1, p2))
}

fn intersection_matrix(curve: &CurveSpec, cycles: &[LiftedCycle]) -> Result<DMatrix<f64>> {
    let m = cycles.len();
    let mut j = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in a + 1..m {
            let v = cycle_intersection(curve, &cycles[a], &cycles[b])? as f64;
            j[(a, b)] = v;
            j[(b, a)] = -v;
        }
    }
    Ok(j)
}

/// The period sum on the torus from the lifts of `(1, 0)` and `(0, 1)` on
/// the single-sheeted curve `k = 0`.
fn torus_period_sum(curve: &CurveSpec) -> Result<C> {
    let one = curve_from_h(&[C::new(0.0, 0.0)], curve.data().clone())?;
    let tau = one.data().tau();
    let cycles = vec![
        lift_cycle(&one, &BasePath::word(C::new(-0.5, 0.0) + 0.37 * tau, 1, 0, tau), 0)?,
        lift_cycle(&one, &BasePath::word(C::new(0.37, 0.0) - 0.5 * tau, 0, 1, tau), 0)?,
    ];
    let j = intersection_matrix(&one, &cycles)?;
    let (p1, p2) = periods_of(&one, &cycles)?;
    period_sum(&p1, &p2, &j)
}

/// Coordinates `(s, t)` with `z = s + tτ`.
fn lattice_coords(z: C, tau: C) -> (f64, f64) {
    let t = z.im / tau.im;
    (z.re - t * tau.re, t)
}

/// Candidate cycles on a two-sheeted curve: lifts of horizontal and vertical
/// loops at offsets on either side of the branch points, and a thin polygon
/// around the pair of branch points.
fn candidate_cycles(curve: &CurveSpec, branch: &[C]) -> Result<Vec<LiftedCycle>> {
    let data = curve.data();
    let tau = data.tau();
    let coords: Vec<(f64, f64)> = branch.iter().map(|&z| lattice_coords(data.reduce_mod_lattice(z), tau)).collect();
    let b0 = data.reduce_mod_lattice(branch[0]);
    let sep = (-1..=1)
        .flat_map(|m| (-1..=1).map(move |n| (m, n)))
        .map(|(m, n)| (data.reduce_mod_lattice(branch[1]) + data.lattice_point(m, n) - b0).norm())
        .fold(f64::INFINITY, f64::min);
    let guard = (0.3 * sep).min(0.08);
    let clear = |z: C| branch.iter().all(|&b| data.torus_distance(z - b) > guard) && data.torus_distance(z) > guard;
    let mut paths = Vec::new();
    // one straight loop in each of the two gaps between the branch
    // coordinates, so the pair differs by a loop around a branch point
    for horizontal in [true, false] {
        let mut vals: Vec<f64> =
            coords.iter().map(|c| if horizontal { c.1 } else { c.0 }).collect();
        vals.sort_by(f64::total_cmp);
        let gaps = [(vals[0], vals[1]), (vals[1], vals[0] + 1.0)];
        for (lo, hi) in gaps {
            for frac in [0.5, 0.3, 0.7, 0.15, 0.85] {
                let t = lo + frac * (hi - lo);
                let (start, step, word) = if horizontal {
                    (C::new(-0.5 + 0.017, 0.0) + tau * t, C::new(1.0, 0.0), (1, 0))
                } else {
                    (C::new(t, 0.0) - tau * (0.5 - 0.019), tau, (0, 1))
                };
                if (0..200).all(|i| clear(start + step * (i as f64 / 200.0))) {
                    paths.push(BasePath::word(start, word.0, word.1, tau));
                    break;
                }
            }
        }
    }
    // polygon around the two branch points, using the translate of the
    // second that keeps the connecting segment clear of the lattice
    let mut best: Option<(f64, C)> = None;
    for m in -1..=1 {
        for n in -1..=1 {
            let b1 = data.reduce_mod_lattice(branch[1]) + data.lattice_point(m, n);
            let clearance = (0..=40)
                .map(|i| data.torus_distance(b0 + (b1 - b0) * (i as f64 / 40.0)))
                .fold(f64::INFINITY, f64::min);
            let score = clearance - 0.1 * (b1 - b0).norm();
            if best.is_none_or(|(s, _)| score > s) {
                best = Some((score, b1));
            }
        }
    }
    let (_, b1) = best.unwrap();
    let along = (b1 - b0) / (b1 - b0).norm();
    let width = (0.3 * sep).min(0.05);
    let normal = along * C::new(0.0, 1.0) * width;
    let ext = along * width;
    paths.push(BasePath::polygon(vec![b0 - ext - normal, b1 + ext - normal, b1 + ext + normal, b0 - ext + normal]));

    let mut cycles = Vec::new();
    for path in paths {
        for sheet in 0..curve.n() {
            let cycle = lift_cycle(curve, &path, sheet)?;
            // a lift through both sheets is the same cycle from either start
            if cycle.repeats > 1 && sheet > 0 {
                continue;
            }
            cycles.push(cycle);
        }
    }
    Ok(cycles)
}

/// Chooses `2g` cycles whose intersection matrix has the largest
/// nonzero determinant.
fn choose_basis(j: &DMatrix<f64>, size: usize) -> Option<(Vec<usize>, f64)> {
    let m = j.nrows();
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut idx: Vec<usize> = (0..size).collect();
    if size > m {
        return None;
    }
    loop {
        let sub = DMatrix::from_fn(size, size, |a, b| j[(idx[a], idx[b])]);
        let det = sub.determinant().abs();
        // the smallest nonzero determinant keeps the basis closest to unimodular
        if det > 0.5 && best.as_ref().is_none_or(|(_, d)| det < *d - 0.5) {
            best = Some((idx.clone(), det));
        }
        // next combination
        let mut i = size;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < m - size + i {
                idx[i] += 1;
                for k in i + 1..size {
                    idx[k] = idx[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Degree of `z` on the curve, by counting sheets and, for `N = 2`, by the
/// period sum over a numerically constructed homology basis.
pub fn degree_check(curve: &CurveSpec) -> Result<DegreeReport> {
    let n = curve.n();
    if n > 3 {
        return Err(Error::UnsupportedOrder(n));
    }
    let probe = C::new(0.313, 0.0) + curve.data().tau() * 0.271;
    let sheet_count = curve.roots(probe)?.len();
    let mut report = DegreeReport {
        sheet_count,
        raw_period_sum: None,
        torus_period_sum: None,
        period_sum: None,
        deviation: None,
        intersection_det: None,
    };
    if n != 2 {
        return Ok(report);
    }
    let census = singularity_census(curve, &CensusOptions::default())?;
    if !census.is_smooth() || census.branch_points.len() != 2 {
        return Err(Error::UnsupportedCurve(format!(
            "expected a smooth curve with two branch points, found {} branch points",
            census.branch_points.len()
        )));
    }
    let cycles = candidate_cycles(curve, &census.branch_points)?;
    let j = intersection_matrix(curve, &cycles)?;
    let (basis, det) = choose_basis(&j, 2 * n)
        .ok_or_else(|| Error::UnsupportedCurve("candidate cycles do not span the homology".into()))?;
    let chosen: Vec<LiftedCycle> = basis.iter().map(|&i| cycles[i].clone()).collect();
    let jb = DMatrix::from_fn(basis.len(), basis.len(), |a, b| j[(basis[a], basis[b])]);
    let (p1, p2) = periods_of(curve, &chosen)?;
    let raw = period_sum(&p1, &p2, &jb)?;
    let torus = torus_period_sum(curve)?;
    let value = raw / torus;
    let rounded = value.re.round();
    report.raw_period_sum = Some(raw);
    report.torus_period_sum = Some(torus);
    report.period_sum = Some(value.re);
    report.deviation = Some((value - rounded).norm());
    report.intersection_det = Some(det);
    if (value - sheet_count as f64).norm() > 1e-4 {
        return Err(Error::Consistency(format!("sheet count {sheet_count} but period sum {value}")));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{sample_tame_state, PhasePoint};
    use crate::elliptic::{lattice_invariants, EllipticData};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn data() -> Arc<EllipticData> {
        Arc::new(lattice_invariants(c(0.1, 1.05)).unwrap())
    }

    fn two_sheets() -> CurveSpec {
        CurveSpec::det(sample_tame_state(2, &data(), 1.0, &mut ChaCha8Rng::seed_from_u64(7)).unwrap())
    }

    #[test]
    fn single_sheet_periods() {
        let d = data();
        let one = CurveSpec::det(PhasePoint::new(vec![c(0.2, 0.1)], vec![c(0.6, -0.4)], d.clone()).unwrap());
        let base = c(-0.4, 0.3);
        let phi1 = DifferentialOnCurve::new(one.clone(), Which::Phi1);
        let a = phi_period(&phi1, &LiftedLoop { a: 1, b: 0, basepoint: base, sheet: 0 }).unwrap();
        let b = phi_period(&phi1, &LiftedLoop { a: 0, b: 1, basepoint: base, sheet: 0 }).unwrap();
        assert!(a.period.norm() < 1e-9, "{a:?}");
        assert_eq!(b.nearest_int, -1);
        assert!(b.is_integer(), "{b:?}");
        let phi2 = DifferentialOnCurve::new(one, Which::Phi2);
        let a = phi_period(&phi2, &LiftedLoop { a: 1, b: 0, basepoint: base, sheet: 0 }).unwrap();
        let b = phi_period(&phi2, &LiftedLoop { a: 0, b: 1, basepoint: base, sheet: 0 }).unwrap();
        assert!(a.is_integer() && a.nearest_int == 1, "{a:?}");
        assert!(b.period.norm() < 1e-9, "{b:?}");
    }

    #[test]
    fn two_sheet_periods_are_integers() {
        let curve = two_sheets();
        let base = c(0.41, 0.47);
        for which in [Which::Phi1, Which::Phi2] {
            let diff = DifferentialOnCurve::new(curve.clone(), which);
            for (a, b) in [(1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (1, 2)] {
                let r = phi_period(&diff, &LiftedLoop { a, b, basepoint: base, sheet: 0 }).unwrap();
                assert!(r.is_integer(), "{r:?}");
            }
        }
    }

    #[test]
    fn degree_by_both_routes() {
        let r = degree_check(&two_sheets()).unwrap();
        assert_eq!(r.sheet_count, 2);
        assert!(r.deviation.unwrap() < 1e-4, "{r:?}");
        assert!((r.period_sum.unwrap() - 2.0).abs() < 1e-4, "{r:?}");
        // standard orientation gives the opposite sign on both sides
        assert!((r.raw_period_sum.unwrap() + 2.0).norm() < 1e-4, "{r:?}");
        let one = curve_from_h(&[c(0.2, 0.1)], data()).unwrap();
        let r1 = degree_check(&one).unwrap();
        assert_eq!((r1.sheet_count, r1.period_sum), (1, None));
        let three = curve_from_h(&[c(0.2, 0.1), c(-0.3, 0.2), c(0.1, 0.0)], data()).unwrap();
        assert_eq!(degree_check(&three).unwrap().sheet_count, 3);
    }

    #[test]
    fn basis_search_prefers_unimodular() {
        let j = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 1.0, -2.0, 0.0, 0.0, -1.0, 0.0, 0.0]);
        let (idx, det) = choose_basis(&j, 2).unwrap();
        assert_eq!((idx, det), (vec![0, 2], 1.0));
    }
}

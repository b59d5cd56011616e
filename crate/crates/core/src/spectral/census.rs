use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::CurveSpec;
use crate::elliptic::taylor_from_circle;
use crate::error::{Error, Result};
use crate::poly;

type C = Complex64;

/// Sylvester resultant of `R(·, z)` and `∂R/∂k(·, z)`.
pub fn discriminant(curve: &CurveSpec, z: C) -> Result<C> {
    let r = curve.coefficients(z)?;
    Ok(resultant_with_derivative(&r))
}

fn resultant_with_derivative(r: &[C]) -> C {
    let n = r.len() - 1;
    if n < 2 {
        return C::new(1.0, 0.0);
    }
    let dr = poly::derivative(r);
    let size = 2 * n - 1;
    // rows: n−1 shifts of R, n shifts of R′; highest power first
    let mut s = DMatrix::<C>::zeros(size, size);
    for row in 0..n - 1 {
        for (j, c) in r.iter().rev().enumerate() {
            s[(row, row + j)] = *c;
        }
    }
    for row in 0..n {
        for (j, c) in dr.iter().rev().enumerate() {
            s[(n - 1 + row, row + j)] = *c;
        }
    }
    s.determinant()
}

/// Mixed partial derivatives of `R` at `(k, z)` up to total order three.
#[derive(Debug, Clone, Copy, Default)]
pub struct LocalDerivatives {
    pub r: C,
    pub rk: C,
    pub rz: C,
    pub rkk: C,
    pub rkz: C,
    pub rzz: C,
    pub rkkk: C,
    pub rkkz: C,
    pub rkzz: C,
    pub rzzz: C,
}

impl LocalDerivatives {
    fn hessian_det(&self) -> C {
        self.rkk * self.rzz - self.rkz * self.rkz
    }

    fn hessian_scale(&self) -> f64 {
        self.rkk.norm().max(self.rkz.norm()).max(self.rzz.norm()).max(1e-300)
    }
}

const DERIV_NODES: usize = 32;

/// z-derivatives come from Cauchy differentiation of every coefficient on
/// a circle that stays clear of the lattice.
pub fn local_derivatives(curve: &CurveSpec, k: C, z: C) -> Result<LocalDerivatives> {
    let data = curve.data();
    let radius = (0.3 * data.torus_distance(z)).min(0.05);
    if radius < 1e-6 {
        return Err(Error::Pole {
            what: "spectral curve coefficients".into(),
            lattice_point: data.nearest_lattice_point(z).0,
            distance: data.torus_distance(z),
        });
    }
    let n = curve.n();
    let samples: Vec<Vec<C>> = (0..DERIV_NODES)
        .map(|j| curve.coefficients(z + C::from_polar(radius, 2.0 * PI * j as f64 / DERIV_NODES as f64)))
        .collect::<Result<_>>()?;
    // dz[m][i]: m-th z-derivative of the coefficient of kⁱ
    let mut dz = vec![vec![C::new(0.0, 0.0); n + 1]; 4];
    for i in 0..=n {
        let column: Vec<C> = samples.iter().map(|s| s[i]).collect();
        for (m, v) in taylor_from_circle(&column, radius, 3).into_iter().enumerate() {
            dz[m][i] = v;
        }
    }
    dz[0] = curve.coefficients(z)?;
    let at = |m: usize, kd: usize| -> C {
        let mut p = dz[m].clone();
        for _ in 0..kd {
            p = poly::derivative(&p);
        }
        poly::eval(&p, k)
    };
    Ok(LocalDerivatives {
        r: at(0, 0),
        rk: at(0, 1),
        rz: at(1, 0),
        rkk: at(0, 2),
        rkz: at(1, 1),
        rzz: at(2, 0),
        rkkk: at(0, 3),
        rkkz: at(1, 2),
        rkzz: at(2, 1),
        rzzz: at(3, 0),
    })
}

fn solve2(a: [[C; 2]; 2], b: [C; 2]) -> Option<[C; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.norm() == 0.0 || !det.is_finite() {
        return None;
    }
    Some([(b[0] * a[1][1] - b[1] * a[0][1]) / det, (a[0][0] * b[1] - a[1][0] * b[0]) / det])
}

/// A zero of `(∂R/∂k, ∂R/∂z)`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct CriticalPoint {
    pub k: C,
    pub z: C,
    /// `R` at the point.
    pub value: C,
    pub hessian_det: C,
    pub iterations: usize,
}

const NEWTON_ITERS: usize = 40;

/// Newton iteration for `∂R/∂k = ∂R/∂z = 0` from `(k₀, z₀)`.
pub fn critical_point(curve: &CurveSpec, k0: C, z0: C) -> Result<CriticalPoint> {
    let (mut k, mut z) = (k0, z0);
    for it in 0..NEWTON_ITERS {
        let d = local_derivatives(curve, k, z)?;
        let step = solve2([[d.rkk, d.rkz], [d.rkz, d.rzz]], [d.rk, d.rz])
            .ok_or_else(|| Error::Search(format!("singular Hessian at k = {k}, z = {z}")))?;
        // damp wild steps so the iterate stays on the patch it started on
        let size = step[0].norm().max(step[1].norm());
        let damp = if size > 0.1 { 0.1 / size } else { 1.0 };
        k -= step[0] * damp;
        z -= step[1] * damp;
        if size < 1e-13 * (1.0 + k.norm()) {
            let d = local_derivatives(curve, k, z)?;
            return Ok(CriticalPoint { k, z, value: d.r, hessian_det: d.hessian_det(), iterations: it + 1 });
        }
    }
    Err(Error::Search(format!("critical-point Newton did not converge from k = {k0}, z = {z0}")))
}

#[derive(Debug, Clone)]
pub struct CensusOptions {
    /// Cells per side when subdividing a cell.
    pub grid: usize,
    /// Cells smaller than this (in units of the period cell) stop subdividing.
    pub min_cell: f64,
    pub eps_sing: f64,
    pub cubic_threshold: f64,
}

impl Default for CensusOptions {
    fn default() -> Self {
        Self { grid: 3, min_cell: 1e-4, eps_sing: 1e-8, cubic_threshold: 1e-6 }
    }
}

impl CensusOptions {
    /// The same census on a grid with half the spacing.
    pub fn refined(&self) -> Self {
        Self { grid: 2 * self.grid, ..self.clone() }
    }
}

/// A parallelogram `origin + [0, w]·1 + [0, h]·τ`.
#[derive(Debug, Clone, Copy)]
struct Cell {
    origin: C,
    w: f64,
    h: f64,
}

impl Cell {
    fn corners(&self, tau: C) -> [C; 4] {
        let (a, b) = (C::new(self.w, 0.0), tau * self.h);
        [self.origin, self.origin + a, self.origin + a + b, self.origin + b]
    }

    fn centre(&self, tau: C) -> C {
        self.origin + 0.5 * self.w + tau * (0.5 * self.h)
    }

    fn split(&self, grid: usize, tau: C) -> Vec<Cell> {
        let (w, h) = (self.w / grid as f64, self.h / grid as f64);
        let mut out = Vec::with_capacity(grid * grid);
        for b in 0..grid {
            for a in 0..grid {
                out.push(Cell { origin: self.origin + w * a as f64 + tau * (h * b as f64), w, h });
            }
        }
        out
    }

    fn contains(&self, z: C, tau: C) -> bool {
        let b = (z - self.origin).im / tau.im;
        let a = (z - self.origin).re - b * tau.re;
        (0.0..self.w).contains(&a) && (0.0..self.h).contains(&b)
    }
}

const MAX_EDGE_DEPTH: usize = 24;

fn edge_winding<F: Fn(C) -> Result<C>>(f: &F, a: C, b: C, fa: C, fb: C, depth: usize) -> Result<f64> {
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let (left, right) = ((fm / fa).arg(), (fb / fm).arg());
    if left.abs() < PI / 8.0 && right.abs() < PI / 8.0 {
        return Ok(left + right);
    }
    if depth >= MAX_EDGE_DEPTH {
        return Err(Error::Search(format!("discriminant vanishes on a cell edge near {a}")));
    }
    Ok(edge_winding(f, a, m, fa, fm, depth + 1)? + edge_winding(f, m, b, fm, fb, depth + 1)?)
}

fn winding<F: Fn(C) -> Result<C>>(f: &F, corners: &[C]) -> Result<i64> {
    let values: Vec<C> = corners.iter().map(|&z| f(z)).collect::<Result<_>>()?;
    let mut total = 0.0;
    for i in 0..corners.len() {
        let j = (i + 1) % corners.len();
        total += edge_winding(f, corners[i], corners[j], values[i], values[j], 0)?;
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

/// Zeros of the discriminant in one period cell, with multiplicities, by
/// argument-principle counting on recursively subdivided cells.
pub fn discriminant_zeros(curve: &CurveSpec, opts: &CensusOptions) -> Result<Vec<(C, usize)>> {
    if curve.n() < 2 {
        return Ok(vec![]);
    }
    let data = curve.data();
    let tau = data.tau();
    let f = |z: C| discriminant(curve, z);
    // the roots go like −aᵢ/z with a = (1 − N, 1, …, 1), so the pole has
    // order 2(N − 1)
    let pole = 2 * (curve.n() as i64 - 1);
    // a zero sitting on a cell edge spoils the count; retry on shifted grids
    let mut last = None;
    for shift in GRID_SHIFTS {
        let origin = C::new(-0.5 - shift.0, 0.0) - tau * (0.5 + shift.1);
        match zeros_from(&f, Cell { origin, w: 1.0, h: 1.0 }, pole, tau, opts) {
            Ok(found) => return Ok(found),
            Err(e @ Error::Search(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap())
}

const GRID_SHIFTS: [(f64, f64); 4] = [(0.0137, 0.0071), (0.0291, 0.0213), (0.0053, 0.0379), (0.0419, 0.0117)];

fn zeros_from<F: Fn(C) -> Result<C>>(f: &F, top: Cell, pole: i64, tau: C, opts: &CensusOptions) -> Result<Vec<(C, usize)>> {
    let mut found = Vec::new();
    let mut stack = vec![(top, pole)];
    while let Some((cell, expected)) = stack.pop() {
        let mut assigned = 0;
        let mut children = Vec::new();
        for child in cell.split(opts.grid, tau) {
            let holds_pole = child.contains(C::new(0.0, 0.0), tau);
            let count = winding(f, &child.corners(tau))? + if holds_pole { pole } else { 0 };
            if count < 0 {
                return Err(Error::Search(format!("negative zero count {count} in a cell")));
            }
            assigned += count;
            if count > 0 {
                children.push((child, count));
            }
        }
        if assigned != expected {
            return Err(Error::Search(format!("cell at {} of width {} counts {assigned} zeros, parent expected {expected}", cell.origin, cell.w)));
        }
        for (child, count) in children {
            if child.w < opts.min_cell {
                found.push((child.centre(tau), count as usize));
            } else {
                stack.push((child, count));
            }
        }
    }
    found.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    Ok(found)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Kind {
    Node,
    Cusp,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SingularPoint {
    pub z: C,
    pub k: C,
    /// `(|R|, |∂R/∂k|, |∂R/∂z|)` at the point.
    pub residuals: [f64; 3],
    pub hessian_det: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Unclassified {
    pub z: C,
    pub k: C,
    pub reason: String,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CensusReport {
    pub n: usize,
    pub nodes: Vec<SingularPoint>,
    pub cusps: Vec<SingularPoint>,
    pub unclassified: Vec<Unclassified>,
    /// Simple zeros of the discriminant: the branch points of `z`.
    pub branch_points: Vec<C>,
}

fn pair(z: C) -> [f64; 2] {
    [z.re, z.im]
}

impl CensusReport {
    pub fn is_smooth(&self) -> bool {
        self.nodes.is_empty() && self.cusps.is_empty() && self.unclassified.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let pts = |v: &[SingularPoint]| -> Vec<serde_json::Value> {
            v.iter().map(|p| serde_json::json!({"z": pair(p.z), "k": pair(p.k)})).collect()
        };
        let verdict = verify_cusp_bound(self);
        serde_json::json!({
            "N": self.n,
            "nodes": pts(&self.nodes),
            "cusps": pts(&self.cusps),
            "unclassified": self.unclassified.iter()
                .map(|u| serde_json::json!({"z": pair(u.z), "k": pair(u.k), "reason": u.reason}))
                .collect::<Vec<_>>(),
            "bound": {
                "n": self.cusps.len(),
                "k": self.nodes.len(),
                "N": self.n,
                "margin": verdict.margin,
                "pass": verdict.pass == Some(true),
            },
        })
    }
}

fn lex(a: &(C, C), b: &(C, C)) -> std::cmp::Ordering {
    a.0.re
        .total_cmp(&b.0.re)
        .then(a.0.im.total_cmp(&b.0.im))
        .then(a.1.re.total_cmp(&b.1.re))
        .then(a.1.im.total_cmp(&b.1.im))
}

/// Closest pair of roots of `R(·, z)`; returns their midpoint.
fn collision_k(curve: &CurveSpec, z: C) -> Result<C> {
    let roots = curve.roots(z)?;
    let mut best = (f64::INFINITY, roots[0]);
    for i in 0..roots.len() {
        for j in 0..i {
            let d = (roots[i] - roots[j]).norm();
            if d < best.0 {
                best = (d, 0.5 * (roots[i] + roots[j]));
            }
        }
    }
    Ok(best.1)
}

/// Newton for the branch point `R = ∂R/∂k = 0` near `(k, z)`.
fn branch_point(curve: &CurveSpec, mut k: C, mut z: C) -> Result<C> {
    for _ in 0..NEWTON_ITERS {
        let d = local_derivatives(curve, k, z)?;
        let Some(step) = solve2([[d.rk, d.rz], [d.rkk, d.rkz]], [d.r, d.rk]) else { break };
        k -= step[0];
        z -= step[1];
        if step[0].norm().max(step[1].norm()) < 1e-13 * (1.0 + k.norm()) {
            return Ok(z);
        }
    }
    Err(Error::Search(format!("branch point Newton did not converge near z = {z}")))
}

/// Singular points of the curve over one period cell of `z`; the points
/// over `z = 0` are outside the search domain.
pub fn singularity_census(curve: &CurveSpec, opts: &CensusOptions) -> Result<CensusReport> {
    let n = curve.n();
    if n > 5 {
        return Err(Error::UnsupportedOrder(n));
    }
    let mut report = CensusReport { n, nodes: vec![], cusps: vec![], unclassified: vec![], branch_points: vec![] };
    if n < 2 {
        return Ok(report);
    }
    let data = curve.data().clone();
    let tau = data.tau();
    let mut singular: Vec<(C, C, Option<Kind>, SingularPoint)> = Vec::new();
    for (z0, mult) in discriminant_zeros(curve, opts)? {
        let k0 = collision_k(curve, z0)?;
        if mult == 1 {
            if let Ok(zb) = branch_point(curve, k0, z0) {
                let d = local_derivatives(curve, k0, zb)?;
                if d.rz.norm() >= opts.eps_sing {
                    report.branch_points.push(zb);
                    continue;
                }
            }
        }
        match critical_point(curve, k0, z0) {
            Ok(cp) if (cp.z - z0).norm() < 1e-3 && cp.value.norm() < opts.eps_sing => {
                let d = local_derivatives(curve, cp.k, cp.z)?;
                let residuals = [d.r.norm(), d.rk.norm(), d.rz.norm()];
                let scale = d.hessian_scale();
                let det = d.hessian_det().norm() / (scale * scale);
                let point = SingularPoint { z: cp.z, k: cp.k, residuals, hessian_det: det };
                let kind = if det > opts.cubic_threshold {
                    Some(Kind::Node)
                } else {
                    // kernel direction of the rank-one Hessian
                    let (v0, v1) = if d.rkk.norm() >= d.rzz.norm() { (-d.rkz, d.rkk) } else { (d.rzz, -d.rkz) };
                    let norm = (v0.norm_sqr() + v1.norm_sqr()).sqrt();
                    let (v0, v1) = (v0 / norm, v1 / norm);
                    let cubic = d.rkkk * v0.powi(3) + 3.0 * d.rkkz * v0 * v0 * v1 + 3.0 * d.rkzz * v0 * v1 * v1 + d.rzzz * v1.powi(3);
                    (cubic.norm() > opts.cubic_threshold).then_some(Kind::Cusp)
                };
                singular.push((cp.z, cp.k, kind, point));
            }
            Ok(cp) if mult == 1 => {
                // a simple zero whose branch-point refinement failed
                report.unclassified.push(Unclassified {
                    z: z0,
                    k: k0,
                    reason: format!("simple discriminant zero, critical value {:.2e}", cp.value.norm()),
                });
            }
            Ok(cp) => report.unclassified.push(Unclassified {
                z: z0,
                k: k0,
                reason: format!("multiple discriminant zero; nearest critical point at {} with value {:.2e}", cp.z, cp.value.norm()),
            }),
            Err(e) => report.unclassified.push(Unclassified { z: z0, k: k0, reason: e.to_string() }),
        }
    }
    // the same point may be reached from neighbouring cells
    singular.sort_by(|a, b| lex(&(a.0, a.1), &(b.0, b.1)));
    let mut kept: Vec<(C, C, Option<Kind>, SingularPoint)> = Vec::new();
    for s in singular {
        let dup = kept.iter().any(|t| data.torus_distance(t.0 - s.0) < 1e-6 && (t.1 - s.1).norm() < 1e-6);
        if !dup {
            kept.push(s);
        }
    }
    for (z, k, kind, point) in kept {
        let z = data.reduce_mod_lattice(z);
        let point = SingularPoint { z, ..point };
        match kind {
            Some(Kind::Node) => report.nodes.push(point),
            Some(Kind::Cusp) => report.cusps.push(point),
            None => report.unclassified.push(Unclassified {
                z,
                k,
                reason: format!("degenerate Hessian ({:.2e}) and vanishing cubic", point.hessian_det),
            }),
        }
    }
    report.branch_points = report.branch_points.iter().map(|&z| data.reduce_mod_lattice(z)).collect();
    report.branch_points.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    report.unclassified.sort_by(|a, b| lex(&(a.z, a.k), &(b.z, b.k)));
    let _ = tau;
    Ok(report)
}

/// Moves an `H`-backed curve onto the discriminant locus along `I₀`.
///
/// Shifting `I₀` adds a constant to `R`, so the curve `R − R(p)` is singular
/// exactly at a critical point `p` of `R`. Critical points are sought by
/// Newton from the branch points of the original curve; the first one with a
/// nondegenerate Hessian wins, which makes the new singularity a node.
pub fn nodal_curve(curve: &CurveSpec, opts: &CensusOptions) -> Result<(CurveSpec, CriticalPoint)> {
    let census = singularity_census(curve, opts)?;
    for &zb in &census.branch_points {
        let k0 = collision_k(curve, zb)?;
        let Ok(cp) = critical_point(curve, k0, zb) else { continue };
        let d = local_derivatives(curve, cp.k, cp.z)?;
        let scale = d.hessian_scale();
        if d.hessian_det().norm() / (scale * scale) > 1e-3 && curve.data().torus_distance(cp.z) > 0.05 {
            return Ok((curve.shifted(-cp.value)?, cp));
        }
    }
    Err(Error::Search("no nondegenerate critical point reached from the branch points".into()))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BoundVerdict {
    /// `None` when the census has unclassified points.
    pub pass: Option<bool>,
    /// `N − 2·cusps − nodes`.
    pub margin: i64,
}

/// The bound `2·cusps + nodes < N`.
pub fn verify_cusp_bound(report: &CensusReport) -> BoundVerdict {
    let margin = report.n as i64 - 2 * report.cusps.len() as i64 - report.nodes.len() as i64;
    let pass = report.unclassified.is_empty().then_some(margin > 0);
    BoundVerdict { pass, margin }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::sample_tame_state;
    use crate::elliptic::{lattice_invariants, EllipticData};
    use crate::spectral::curve_from_h;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn data() -> Arc<EllipticData> {
        Arc::new(lattice_invariants(c(0.1, 1.05)).unwrap())
    }

    fn random_h(n: usize, seed: u64) -> CurveSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let i: Vec<C> = (0..n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        curve_from_h(&i, data()).unwrap()
    }

    #[test]
    fn resultant_matches_root_product() {
        // monic with roots 1, 2, i: disc = Π (rᵢ − rⱼ)², up to the sign (−1)^{n(n−1)/2}
        let roots = [c(1.0, 0.0), c(2.0, 0.0), c(0.0, 1.0)];
        let mut p = vec![c(1.0, 0.0)];
        for r in roots {
            p = poly::mul(&p, &[-r, c(1.0, 0.0)]);
        }
        let mut disc = c(1.0, 0.0);
        for i in 0..3 {
            for j in 0..i {
                disc *= (roots[i] - roots[j]).powi(2);
            }
        }
        let res = resultant_with_derivative(&p);
        assert!((res + disc).norm() < 1e-12 * disc.norm(), "{res} vs {disc}");
    }

    #[test]
    fn local_derivatives_match_differences() {
        let curve = random_h(3, 1);
        let (k, z) = (c(0.3, -0.2), c(0.41, 0.33));
        let d = local_derivatives(&curve, k, z).unwrap();
        let h = 1e-5;
        let rz = (curve.eval(k, z + h).unwrap() - curve.eval(k, z - h).unwrap()) / (2.0 * h);
        let rk = (curve.eval(k + h, z).unwrap() - curve.eval(k - h, z).unwrap()) / (2.0 * h);
        assert!((rz - d.rz).norm() < 1e-6 * (1.0 + rz.norm()));
        assert!((rk - d.rk).norm() < 1e-6 * (1.0 + rk.norm()));
    }

    #[test]
    fn branch_point_count_matches_genus() {
        // simple branch points: 2g − 2 = 2N − 2
        for n in 2..=3 {
            let r = singularity_census(&random_h(n, 2), &CensusOptions::default()).unwrap();
            assert!(r.is_smooth(), "{r:?}");
            assert_eq!(r.branch_points.len(), 2 * n - 2, "{r:?}");
        }
    }

    #[test]
    fn det_backed_curve_is_smooth() {
        let s = sample_tame_state(2, &data(), 1.0, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let r = singularity_census(&CurveSpec::det(s), &CensusOptions::default()).unwrap();
        assert!(r.is_smooth() && r.branch_points.len() == 2, "{r:?}");
    }

    #[test]
    fn single_sheet_census_empty() {
        let r = singularity_census(&random_h(1, 3), &CensusOptions::default()).unwrap();
        assert!(r.is_smooth() && r.branch_points.is_empty());
        assert_eq!(verify_cusp_bound(&r), BoundVerdict { pass: Some(true), margin: 1 });
    }

    #[test]
    fn synthetic_node_is_found_once() {
        let opts = CensusOptions::default();
        let (nodal, cp) = nodal_curve(&random_h(3, 5), &opts).unwrap();
        let r = singularity_census(&nodal, &opts).unwrap();
        assert_eq!((r.nodes.len(), r.cusps.len(), r.unclassified.len()), (1, 0, 0), "{r:?}");
        let node = &r.nodes[0];
        assert!(node.residuals.iter().all(|&x| x < opts.eps_sing), "{node:?}");
        assert!(node.hessian_det > 1e-3);
        assert!(nodal.data().torus_distance(node.z - cp.z) < 1e-7);
        // the node absorbs two of the 2N − 2 branch points
        assert_eq!(r.branch_points.len(), 2);
        assert_eq!(verify_cusp_bound(&r), BoundVerdict { pass: Some(true), margin: 2 });
        // halving the grid spacing reproduces the census
        let fine = singularity_census(&nodal, &opts.refined()).unwrap();
        assert_eq!(fine.nodes.len(), 1);
        assert!((fine.nodes[0].z - node.z).norm() < 10.0 * opts.eps_sing);
        assert!((fine.nodes[0].k - node.k).norm() < 10.0 * opts.eps_sing);
    }

    #[test]
    fn census_json_shape() {
        let r = singularity_census(&random_h(3, 2), &CensusOptions::default()).unwrap();
        let j = r.to_json();
        assert_eq!(j["N"], 3);
        assert_eq!(j["bound"]["margin"], 3);
        assert_eq!(j["bound"]["pass"], true);
        assert!(j["nodes"].as_array().unwrap().is_empty());
    }

    #[test]
    fn bound_arithmetic() {
        let p = SingularPoint { z: c(0.0, 0.0), k: c(0.0, 0.0), residuals: [0.0; 3], hessian_det: 1.0 };
        let cusp = CensusReport { n: 2, nodes: vec![], cusps: vec![p.clone()], unclassified: vec![], branch_points: vec![] };
        assert_eq!(verify_cusp_bound(&cusp), BoundVerdict { pass: Some(false), margin: 0 });
        let mut r = CensusReport { n: 3, nodes: vec![p.clone()], cusps: vec![], unclassified: vec![], branch_points: vec![] };
        assert_eq!(verify_cusp_bound(&r), BoundVerdict { pass: Some(true), margin: 2 });
        r.unclassified.push(Unclassified { z: p.z, k: p.k, reason: String::new() });
        assert_eq!(verify_cusp_bound(&r).pass, None);
    }
}

//! Spectral curves `R(k, z) = det(kI + L(z)) = 0` of the Calogero-Moser
//! system and their `H(φ)` parametrization
//!
//! ```text
//! R(k, z) = f(k + ζ(z), −z),   f(φ, z) = σ(z)⁻¹ Σₙ σ⁽ⁿ⁾(z)/n! · H⁽ⁿ⁾(φ),
//! H(φ) = φᴺ + Σ Iᵢ φⁱ.
//! ```

mod census;
mod monodromy;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::dynamics::{lax_pair, PhasePoint, Trajectory};
use crate::elliptic::{sigma_z_derivs, EllipticData, MAX_SIGMA_DERIV_ORDER};
use crate::error::{Error, Result};
use crate::linalg::{char_poly_plus, char_poly_plus_by_interpolation};
use crate::poly;

pub use census::{
    singularity_census, verify_cusp_bound, BoundVerdict, CensusOptions, CensusReport, CriticalPoint, SingularPoint,
    Unclassified,
};
pub use census::{critical_point, discriminant, nodal_curve, discriminant_zeros, local_derivatives, LocalDerivatives};
pub use monodromy::{
    cycle_intersection, lift_cycle, loop_permutation, sheet_track, track_path, BasePath, LiftedCycle, LiftedLoop,
    TrackResult, TrackedPath,
};

/// Largest `N` accepted by [`curve_from_h`].
pub const MAX_H_DEGREE: usize = 8;

#[derive(Debug, Clone)]
pub enum CurveSource {
    /// `det(kI + L(z))` along a phase-space point.
    Det(PhasePoint),
    /// Coefficients `I₀ … I_{N−1}` of `H(φ)`.
    H { i: Vec<Complex64>, orientation: HOrientation },
}

/// Orientation of `z` in the `H(φ)` formula.
///
/// With `F(x, z) = σ(z − x)/(σ(z)σ(x)) e^{ζ(z)x}` and `R = det(kI + L)`,
/// the determinant curve equals the formula evaluated at `−z`, that is
/// `R(k, z) = f(k + ζ(z), −z)`. The two readings differ in the odd part of
/// `R` in `z`, which first appears at `N = 3` as the sign of `℘′(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum HOrientation {
    /// `f(k − ζ(z), z)` verbatim.
    Printed,
    /// `f(k + ζ(z), −z)`, which matches the determinant.
    Reflected,
}

#[derive(Debug, Clone)]
pub struct CurveSpec {
    n: usize,
    source: CurveSource,
    data: Arc<EllipticData>,
}

impl CurveSpec {
    pub fn det(state: PhasePoint) -> Self {
        Self {
            n: state.n(),
            data: state.data().clone(),
            source: CurveSource::Det(state),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn data(&self) -> &Arc<EllipticData> {
        &self.data
    }
    pub fn source(&self) -> &CurveSource {
        &self.source
    }

    /// `I₀ … I_{N−1}` for an `H`-backed curve.
    pub fn h_coefficients(&self) -> Option<&[Complex64]> {
        match &self.source {
            CurveSource::H { i, .. } => Some(i),
            CurveSource::Det(_) => None,
        }
    }

    /// Same `H`-backed curve with `I₀` replaced by `I₀ + delta`, which adds
    /// `delta` to `R`.
    pub fn shifted(&self, delta: Complex64) -> Result<Self> {
        let mut i = self
            .h_coefficients()
            .ok_or_else(|| Error::UnsupportedCurve("constant shift needs an H-backed curve".into()))?
            .to_vec();
        i[0] += delta;
        let CurveSource::H { orientation, .. } = self.source else { unreachable!() };
        curve_from_h_with(&i, self.data.clone(), orientation)
    }

    /// Ascending coefficients of `R(·, z)` in `k`; monic of degree `N`.
    pub fn coefficients(&self, z: Complex64) -> Result<Vec<Complex64>> {
        match &self.source {
            CurveSource::Det(state) => Ok(char_poly_plus(&lax_pair(state, z)?.l)),
            CurveSource::H { i, orientation } => {
                let basis = h_basis(self.n, z, &self.data, *orientation)?;
                let mut out = basis[self.n].clone();
                for (coef, b) in i.iter().zip(&basis) {
                    for (o, v) in out.iter_mut().zip(b) {
                        *o += coef * v;
                    }
                }
                Ok(out)
            }
        }
    }

    pub fn eval(&self, k: Complex64, z: Complex64) -> Result<Complex64> {
        Ok(poly::eval(&self.coefficients(z)?, k))
    }

    /// Roots of `R(·, z)`, sorted lexicographically.
    pub fn roots(&self, z: Complex64) -> Result<Vec<Complex64>> {
        let mut r = poly::roots(&self.coefficients(z)?)?;
        poly::sort_roots(&mut r);
        Ok(r)
    }
}

/// `R(·, z)` for `H(φ) = φⁱ`, `i = 0..=n`, as ascending polynomials in `k`.
fn h_basis(n: usize, z: Complex64, data: &EllipticData, orientation: HOrientation) -> Result<Vec<Vec<Complex64>>> {
    let z = match orientation {
        HOrientation::Printed => z,
        HOrientation::Reflected => -z,
    };
    let zeta = data.zeta(z)?;
    let sd = sigma_z_derivs(z, n, data)?;
    let sigma = sd[0];
    if sigma.norm() < data.pole_threshold() {
        return Err(Error::Pole {
            what: "sigma(z)^-1".into(),
            lattice_point: data.nearest_lattice_point(z).0,
            distance: data.torus_distance(z),
        });
    }
    // weights σ⁽ᵐ⁾/(m! σ)
    let mut weights = Vec::with_capacity(n + 1);
    let mut fact = 1.0;
    for (m, s) in sd.iter().enumerate() {
        if m > 0 {
            fact *= m as f64;
        }
        weights.push(s / (sigma * fact));
    }
    let mut basis = Vec::with_capacity(n + 1);
    for i in 0..=n {
        // f(φ) = Σₘ w_m · i!/(i−m)! φ^{i−m}
        let mut f = vec![Complex64::new(0.0, 0.0); i + 1];
        let mut falling = 1.0;
        for (m, w) in weights.iter().enumerate().take(i + 1) {
            if m > 0 {
                falling *= (i + 1 - m) as f64;
            }
            f[i - m] += w * falling;
        }
        let mut shifted = poly::taylor_shift(&f, -zeta);
        shifted.resize(n + 1, Complex64::new(0.0, 0.0));
        basis.push(shifted);
    }
    Ok(basis)
}

/// The `H`-backed curve with `H(φ) = φᴺ + Σ Iᵢ φⁱ`, in the orientation
/// that matches the determinant.
pub fn curve_from_h(i: &[Complex64], data: Arc<EllipticData>) -> Result<CurveSpec> {
    curve_from_h_with(i, data, HOrientation::Reflected)
}

pub fn curve_from_h_with(i: &[Complex64], data: Arc<EllipticData>, orientation: HOrientation) -> Result<CurveSpec> {
    let n = i.len();
    if n == 0 {
        return Err(Error::Domain("H needs at least one coefficient".into()));
    }
    if n > MAX_H_DEGREE || n > MAX_SIGMA_DERIV_ORDER {
        return Err(Error::UnsupportedOrder(n));
    }
    Ok(CurveSpec { n, source: CurveSource::H { i: i.to_vec(), orientation }, data })
}

/// Characteristic coefficients of a determinant-backed curve.
pub fn char_poly(curve: &CurveSpec, z: Complex64) -> Result<Vec<Complex64>> {
    match curve.source() {
        CurveSource::Det(_) => curve.coefficients(z),
        CurveSource::H { .. } => Err(Error::UnsupportedCurve("char_poly needs a determinant-backed curve".into())),
    }
}

/// Largest coefficient discrepancy between the trace recursion and LU
/// determinants interpolated in `k`.
pub fn char_poly_discrepancy(state: &PhasePoint, z: Complex64) -> Result<f64> {
    let l = lax_pair(state, z)?.l;
    let a = char_poly_plus(&l);
    let b = char_poly_plus_by_interpolation(&l);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).norm() / (1.0 + x.norm())).fold(0.0, f64::max))
}

/// `max |rᵢ(z, t) − rᵢ(z, 0)| / (1 + |rᵢ(z, 0)|)` over the samples.
pub fn isospectral_drift(traj: &Trajectory, z: Complex64) -> Result<f64> {
    let base = char_poly_plus(&lax_pair(&traj.states[0], z)?.l);
    let mut worst = 0.0_f64;
    for s in &traj.states[1..] {
        let r = char_poly_plus(&lax_pair(s, z)?.l);
        for (a, b) in r.iter().zip(&base) {
            worst = worst.max((a - b).norm() / (1.0 + b.norm()));
        }
    }
    Ok(worst)
}

/// One factor `k + a/z + h + O(z)` of `R` near `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LaurentBranch {
    pub a: Complex64,
    pub h: Complex64,
}

const LAURENT_LEVELS: usize = 6;
const LAURENT_SUBSTEPS: usize = 16;

/// `R(−w/z, z) zᴺ` as a polynomial in `w`.
fn scaled_roots(curve: &CurveSpec, z: Complex64, guess: Option<Vec<Complex64>>) -> Result<Vec<Complex64>> {
    let n = curve.n() as i32;
    let scaled: Vec<Complex64> = curve
        .coefficients(z)?
        .iter()
        .enumerate()
        .map(|(j, c)| c * (-1.0 / z).powi(j as i32) * z.powi(n))
        .collect();
    match guess {
        None => {
            let mut r = poly::roots(&scaled)?;
            poly::sort_roots(&mut r);
            Ok(r)
        }
        Some(g) => poly::roots_from(&scaled, g),
    }
}

/// Fits `R(k, z) = Π (k + aᵢ/z + hᵢ + O(z))` from the roots at
/// `z = z₀ 2⁻ᵐ`, `m = 0..6`. Roots are continued along the ray in
/// `w = −zk = a + hz + O(z²)`, which stays bounded, and fitted by a
/// quadratic in `z`. The branch with `a` farthest from 1 comes first.
pub fn leading_laurent(curve: &CurveSpec) -> Result<Vec<LaurentBranch>> {
    let data = curve.data();
    let z0 = Complex64::from_polar(0.1 * data.tau().im.min(1.0), 0.7);
    let n = curve.n();
    let mut w = scaled_roots(curve, z0, None)?;
    let mut tracks = vec![w.clone()];
    let mut zs = vec![z0];
    let (mut prev, mut prev_z) = (w.clone(), z0);
    let mut z = z0;
    let ratio = 0.5f64.powf(1.0 / LAURENT_SUBSTEPS as f64);
    for _ in 1..LAURENT_LEVELS {
        for _ in 0..LAURENT_SUBSTEPS {
            let next_z = z * ratio;
            // linear predictor from the last two points
            let predicted: Vec<Complex64> = if prev_z == z {
                w.clone()
            } else {
                w.iter().zip(&prev).map(|(a, b)| a + (a - b) * ((next_z - z) / (z - prev_z))).collect()
            };
            let next = scaled_roots(curve, next_z, Some(predicted.clone()))?;
            if n > 1 {
                let gap = poly::min_gap(&next);
                if gap < 1e-6 {
                    return Err(Error::Tracking(format!("roots within {gap:.1e} at z = {next_z}")));
                }
                if next.iter().zip(&predicted).any(|(a, b)| (a - b).norm() > 0.25 * gap) {
                    return Err(Error::Tracking(format!("ambiguous continuation at z = {next_z}")));
                }
            }
            prev = std::mem::replace(&mut w, next);
            prev_z = z;
            z = next_z;
        }
        tracks.push(w.clone());
        zs.push(z);
    }
    // weight the small-z levels so the O(z³) remainder of the large ones
    // does not leak into a
    let weights: Vec<f64> = zs.iter().map(|z| 1.0 / z.norm_sqr()).collect();
    let mut branches: Vec<LaurentBranch> = (0..n)
        .map(|i| {
            let ys: Vec<Complex64> = tracks.iter().map(|t| t[i]).collect();
            let (a, h) = fit_quadratic(&zs, &ys, &weights);
            LaurentBranch { a, h }
        })
        .collect();
    branches.sort_by(|x, y| {
        let dx = (x.a - 1.0).norm();
        let dy = (y.a - 1.0).norm();
        dy.total_cmp(&dx).then(x.h.re.total_cmp(&y.h.re)).then(x.h.im.total_cmp(&y.h.im))
    });
    Ok(branches)
}

/// Weighted least-squares `y ≈ c₀ + c₁z + c₂z²`; returns `(c₀, c₁)`.
fn fit_quadratic(zs: &[Complex64], ys: &[Complex64], weights: &[f64]) -> (Complex64, Complex64) {
    let a = DMatrix::from_fn(zs.len(), 3, |i, j| zs[i].powi(j as i32) * weights[i]);
    let b = DVector::from_iterator(ys.len(), ys.iter().zip(weights).map(|(y, w)| y * *w));
    let sol = a.svd(true, true).solve(&b, 1e-14).expect("svd with both factors");
    (sol[0], sol[1])
}

/// Outcome of [`fit_h`].
#[derive(Debug, Clone, serde::Serialize)]
pub struct HFit {
    pub i: Vec<Complex64>,
    /// `max |R_det − R_H| / (1 + |R_det|)` on the validation grid.
    pub residual: f64,
    pub condition: f64,
    pub samples: usize,
}

const MAX_CONDITION: f64 = 1e10;

fn fit_samples<R: Rng>(curve: &CurveSpec, count: usize, shift: Complex64, rng: &mut R) -> Result<Vec<(Complex64, Complex64)>> {
    let data = curve.data();
    let tau = data.tau();
    let side = (count as f64).sqrt().ceil() as usize;
    let mut out = Vec::with_capacity(count);
    let mut cell = 0;
    while out.len() < count {
        let (a, b) = (cell % side, cell / side);
        cell += 1;
        let z = (a as f64 + 0.5) / side as f64 - 0.5 + tau * ((b as f64 + 0.5) / side as f64 - 0.5) + shift;
        if data.torus_distance(z) < 0.1 {
            continue;
        }
        let radius = 2.0 + data.zeta(z)?.norm();
        let k = Complex64::from_polar(radius, rng.gen::<f64>() * std::f64::consts::TAU);
        out.push((k, z));
    }
    Ok(out)
}

/// Fits `I₀ … I_{N−1}` so that the `H`-backed curve matches a
/// determinant-backed one, by linear least squares over at least `3N²`
/// samples, and validates on a disjoint grid.
pub fn fit_h<R: Rng>(curve: &CurveSpec, rng: &mut R) -> Result<HFit> {
    fit_h_with(curve, HOrientation::Reflected, rng)
}

pub fn fit_h_with<R: Rng>(curve: &CurveSpec, orientation: HOrientation, rng: &mut R) -> Result<HFit> {
    let CurveSource::Det(_) = curve.source() else {
        return Err(Error::UnsupportedCurve("fit_H needs a determinant-backed curve".into()));
    };
    let n = curve.n();
    if n > 6 {
        return Err(Error::UnsupportedOrder(n));
    }
    let data = curve.data().clone();
    let count = (3 * n * n).max(12);
    let samples = fit_samples(curve, count, Complex64::new(0.013, 0.021), rng)?;
    let mut a = DMatrix::zeros(count, n);
    let mut b = DVector::zeros(count);
    for (row, &(k, z)) in samples.iter().enumerate() {
        let basis = h_basis(n, z, &data, orientation)?;
        let target = curve.eval(k, z)? - poly::eval(&basis[n], k);
        let weight = 1.0 / (1.0 + target.norm());
        for (col, bc) in basis.iter().take(n).enumerate() {
            a[(row, col)] = poly::eval(bc, k) * weight;
        }
        b[row] = target * weight;
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > MAX_CONDITION {
        return Err(Error::Sampling { condition });
    }
    let sol = svd.solve(&b, 0.0).map_err(|e| Error::Sampling { condition: if e.is_empty() { condition } else { f64::INFINITY } })?;
    let i: Vec<Complex64> = sol.iter().copied().collect();
    let fitted = curve_from_h_with(&i, data.clone(), orientation)?;
    let validation = fit_samples(curve, count, Complex64::new(0.37, 0.29) * data.tau().im.min(1.0) / 7.0, rng)?;
    let mut residual = 0.0_f64;
    for (k, z) in validation {
        let r_det = curve.eval(k, z)?;
        let r_h = fitted.eval(k, z)?;
        residual = residual.max((r_det - r_h).norm() / (1.0 + r_det.norm()));
    }
    Ok(HFit { i, residual, condition, samples: count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, sample_state, sample_tame_state};
    use crate::elliptic::lattice_invariants;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn data() -> Arc<EllipticData> {
        Arc::new(lattice_invariants(c(0.1, 1.05)).unwrap())
    }

    fn state(n: usize, seed: u64) -> PhasePoint {
        sample_tame_state(n, &data(), 1.0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    /// A draw near the torsion configuration, for checks that do not evolve it.
    fn static_state(n: usize, seed: u64) -> PhasePoint {
        sample_state(n, &data(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn one_particle_curve() {
        let d = data();
        let s = PhasePoint::new(vec![c(0.2, 0.1)], vec![c(0.6, -0.4)], d.clone()).unwrap();
        let r = char_poly(&CurveSpec::det(s), c(0.3, 0.3)).unwrap();
        assert_eq!(r, vec![c(0.3, -0.2), c(1.0, 0.0)]);
        // N = 1 from H: R = k + I₀
        let h = curve_from_h(&[c(0.3, -0.2)], d).unwrap();
        for (k, z) in [(c(0.1, 0.5), c(0.3, 0.2)), (c(-2.0, 1.0), c(0.7, -0.4))] {
            assert!((h.eval(k, z).unwrap() - (k + c(0.3, -0.2))).norm() < 1e-9);
        }
    }

    #[test]
    fn two_particle_trace_is_constant_in_z() {
        let s = state(2, 3);
        let expected = (s.q()[0] + s.q()[1]) / 2.0;
        let curve = CurveSpec::det(s);
        for z in [c(0.2, 0.3), c(0.6, 0.1)] {
            assert!((char_poly(&curve, z).unwrap()[1] - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn coefficient_pole_orders() {
        let curve = CurveSpec::det(state(3, 1));
        let n = 3;
        let z0 = c(0.05, 0.03);
        let mags: Vec<Vec<f64>> = (0..4)
            .map(|m| {
                let z = z0 / 2f64.powi(m);
                let r = char_poly(&curve, z).unwrap();
                // rᵢ multiplies k^{N−i}
                (1..=n).map(|i| (r[n - i] * z.powi(i as i32)).norm()).collect()
            })
            .collect();
        for i in 0..n {
            let ratio = mags[3][i] / mags[0][i];
            assert!(ratio < 2.0 && mags[3][i] < 50.0, "r_{} {:?}", i + 1, mags);
        }
    }

    #[test]
    fn char_poly_routes_agree() {
        for n in 1..=4 {
            let s = state(n, 5);
            assert!(char_poly_discrepancy(&s, c(0.33, 0.27)).unwrap() < 1e-9);
        }
    }

    #[test]
    fn h_curve_monic_and_elliptic() {
        let d = data();
        let curve = curve_from_h(&[c(0.3, 0.1), c(-0.2, 0.5), c(0.1, -0.3)], d.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let z = c(rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9));
            let k = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let r = curve.coefficients(z).unwrap();
            assert!((r[3] - 1.0).norm() < 1e-9);
            let base = curve.eval(k, z).unwrap();
            for shift in [c(1.0, 0.0), d.tau()] {
                let moved = curve.eval(k, z + shift).unwrap();
                assert!((moved - base).norm() < 1e-8 * (1.0 + base.norm()), "{moved} vs {base}");
            }
        }
    }

    #[test]
    fn rejects_large_h_degree() {
        assert!(matches!(curve_from_h(&[c(0.0, 0.0); 9], data()), Err(Error::UnsupportedOrder(9))));
    }

    #[test]
    fn laurent_exponents() {
        for n in 2..=4 {
            let branches = leading_laurent(&CurveSpec::det(static_state(n, 2))).unwrap();
            assert!((branches[0].a - (1.0 - n as f64)).norm() < 1e-4, "{branches:?}");
            for b in &branches[1..] {
                assert!((b.a - 1.0).norm() < 1e-4, "{branches:?}");
            }
            let sum: Complex64 = branches.iter().map(|b| b.a).sum();
            assert!(sum.norm() < 1e-4);
        }
        let s = PhasePoint::new(vec![c(0.2, 0.1)], vec![c(0.6, -0.4)], data()).unwrap();
        let b = leading_laurent(&CurveSpec::det(s)).unwrap();
        assert!(b[0].a.norm() < 1e-10 && (b[0].h - c(0.3, -0.2)).norm() < 1e-10);
    }

    #[test]
    fn fit_bridges_both_representations() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 1..=4 {
            let s = static_state(n, 6);
            let q_sum: Complex64 = s.q().iter().sum();
            let fit = fit_h(&CurveSpec::det(s), &mut rng).unwrap();
            assert!(fit.residual < 1e-6, "n = {n}: {fit:?}");
            // the top coefficient is the trace: I_{N−1} = Σq/2
            assert!((fit.i[n - 1] - q_sum / 2.0).norm() < 1e-7, "{fit:?}");
        }
    }

    #[test]
    fn printed_orientation_misses_odd_part() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let two = CurveSpec::det(state(2, 6));
        assert!(fit_h_with(&two, HOrientation::Printed, &mut rng).unwrap().residual < 1e-6);
        let three = CurveSpec::det(state(3, 6));
        assert!(fit_h_with(&three, HOrientation::Printed, &mut rng).unwrap().residual > 1e-2);
        // constant term of the determinant: I₀ − I₂℘(z) + ℘′(z)
        let s = state(3, 6);
        let d = s.data().clone();
        let i2: Complex64 = s.q().iter().sum::<Complex64>() / 2.0;
        let curve = CurveSpec::det(s);
        let rest = |z: Complex64| curve.coefficients(z).unwrap()[0] + i2 * d.wp(z).unwrap() - d.wp_prime(z).unwrap();
        assert!((rest(c(0.3, 0.2)) - rest(c(-0.2, 0.33))).norm() < 1e-8);
    }

    #[test]
    fn isospectral_drift_small_and_converging() {
        let s = state(3, 0);
        let z = c(0.31, 0.42);
        let a = isospectral_drift(&integrate(&s, 1.0, 1e-3).unwrap(), z).unwrap();
        let b = isospectral_drift(&integrate(&s, 1.0, 5e-4).unwrap(), z).unwrap();
        assert!(a < 1e-7, "{a}");
        assert!(a / b > 10.0, "{a} {b}");
    }
}

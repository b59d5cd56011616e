//! The acceptance criteria as one deterministic report.
//!
//! Every random draw comes from a single seed; criterion `k` reads stream `k`
//! of a ChaCha generator, so a criterion sees the same numbers whether it runs
//! alone or inside the full suite.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{
    ba_pde_residual, ba_solution, bloch_spread, calibrate_lax, integrate, integrate_with, lax_residual, sample_state,
    sample_tame_state, GridSpec, IntegrateOptions, LITERAL_FORCE_FACTOR,
};
use crate::elliptic::{c_constants, lattice_invariants, EllipticData};
use crate::error::{Error, Result};
use crate::periods::{
    base_case_check, critical_leaf_start, degree_check, phi_period, torus_real_basis, torus_zeros, trace_level_set,
    word_loops, DifferentialOnCurve, LeafEnd, Which,
};
use crate::quadrature::{segment_integral, Segment};
use crate::spectral::{
    fit_h, isospectral_drift, leading_laurent, nodal_curve, singularity_census, verify_cusp_bound, CensusOptions,
    curve_from_h, CurveSpec, Unclassified,
};

type C = Complex64;

pub const CRITERIA: std::ops::RangeInclusive<u32> = 1..=13;

#[derive(Debug, Clone, Serialize)]
pub struct SuiteConfig {
    pub tau: C,
    #[serde(rename = "N")]
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    pub tol: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { tau: C::new(0.0, 1.0), n: 3, dt: 1e-3, t_end: 1.0, seed: 1, tol: 1e-6 }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::Domain(what));
        if !(self.tau.im > 0.0) {
            return bad(format!("Im τ must be positive, got τ = {}", self.tau));
        }
        if self.n == 0 {
            return bad("N must be at least 1".into());
        }
        for (name, v) in [("dt", self.dt), ("t_end", self.t_end), ("tol", self.tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    fn data(&self) -> Result<Arc<EllipticData>> {
        Ok(Arc::new(lattice_invariants(self.tau)?))
    }

    fn rng(&self, stream: u32) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream as u64);
        rng
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Criterion {
    pub id: String,
    pub description: String,
    /// `None` when the measurement itself failed.
    pub measured: Option<f64>,
    pub bound: f64,
    pub pass: bool,
}

impl Criterion {
    /// Passes when `measured < bound`.
    fn below(id: &str, description: &str, measured: f64, bound: f64) -> Self {
        Self::new(id, description, measured, bound, measured < bound)
    }

    fn above(id: &str, description: &str, measured: f64, bound: f64) -> Self {
        Self::new(id, description, measured, bound, measured > bound)
    }

    fn new(id: &str, description: &str, measured: f64, bound: f64, pass: bool) -> Self {
        Self {
            id: id.into(),
            description: description.into(),
            measured: measured.is_finite().then_some(measured),
            bound,
            pass: pass && measured.is_finite(),
        }
    }

    fn error(id: &str, description: &str, bound: f64, err: &Error) -> Self {
        Self { id: id.into(), description: format!("{description} (error: {err})"), measured: None, bound, pass: false }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub version: String,
    pub config: SuiteConfig,
    pub criteria: Vec<Criterion>,
    pub wallclock_seconds: f64,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// The report with the wallclock field zeroed, for byte comparison.
    pub fn canonical_json(&self) -> String {
        let mut r = self.clone();
        r.wallclock_seconds = 0.0;
        r.to_json()
    }
}

/// Runs one numbered criterion. Failures to compute become failing entries.
pub fn run_criterion(id: u32, cfg: &SuiteConfig) -> Vec<Criterion> {
    let (name, result) = match id {
        1 => ("1 special-function kernel", kernel(cfg)),
        2 => ("2 period identities", period_identities(cfg)),
        3 => ("3 Lax representation", lax(cfg)),
        4 => ("4 isospectrality", isospectrality(cfg)),
        5 => ("5 Laurent exponents", laurent(cfg)),
        6 => ("6 representation bridge", bridge(cfg)),
        7 => ("7 integer periods", integer_periods(cfg)),
        8 => ("8 degree formula", degree(cfg)),
        9 => ("9 Baker-Akhiezer equation", baker(cfg)),
        10 => ("10 cusp and node bound", cusp_bound(cfg)),
        11 => ("11 genus-one base case", base_case(cfg)),
        12 => ("12 level-set leaves", leaves(cfg)),
        13 => ("13 determinism", determinism(cfg)),
        _ => return vec![Criterion::error(&id.to_string(), "unknown criterion", 0.0, &Error::Domain(format!("{id}")))],
    };
    result.unwrap_or_else(|e| vec![Criterion::error(&id.to_string(), name, 0.0, &e)])
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let start = Instant::now();
    let criteria = CRITERIA.flat_map(|id| run_criterion(id, cfg)).collect();
    Ok(SuiteReport {
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        criteria,
        wallclock_seconds: start.elapsed().as_secs_f64(),
    })
}

fn random_tau<R: Rng>(rng: &mut R) -> C {
    C::new(rng.gen_range(-0.5..0.5), rng.gen_range(0.5..3.0))
}

/// A point `u + vτ` at least `margin` from the lattice.
fn random_z<R: Rng>(rng: &mut R, data: &EllipticData, margin: f64) -> C {
    loop {
        let z = C::new(rng.gen_range(-0.5..0.5), 0.0) + data.tau() * rng.gen_range(-0.5..0.5);
        if data.torus_distance(z) > margin {
            return z;
        }
    }
}

fn kernel(cfg: &SuiteConfig) -> Result<Vec<Criterion>> {
    let mut rng = cfg.rng(1);
    let (mut legendre, mut ode) = (0.0_f64, 0.0_f64);
    for _ in 0..50 {
        let d = lattice_invariants(random_tau(&mut rng))?;
        legendre = legendre.max((d.eta1() * d.tau() - d.eta2() - C::new(0.0, PI)).norm());
        for _ in 0..3 {
            let z = random_z(&mut rng, &d, 0.05);
            let (p, dp) = (d.wp(z)?, d.wp_prime(z)?);
            let r = dp * dp - (4.0 * p * p * p - d.g2() * p - d.g3());
            ode = ode.max(r.norm() / (1.0 + dp.norm_sqr()));
        }
    }
    let sq = lattice_invariants(C::new(0.0, 1.0))?;
    Ok(vec![
        Criterion::below("1a", "Legendre relation over 50 random tau", legendre, 1e-9),
        Criterion::below("1b", "Weierstrass ODE relative residual over 50 random tau", ode, 1e-9),
        Criterion::below("1c", "eta1 = pi/2 at tau = i", (sq.eta1() - PI / 2.0).norm(), 1e-10),
    ])
}

fn period_identities(cfg: &SuiteConfig) -> Result<Vec<Criterion>> {
    let mut rng = cfg.rng(2);
    let two_pi_i = C::new(0.0, 2.0 * PI);
    let (mut a_err, mut b_err, mut b_flipped) = (0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..20 {
        let d = lattice_invariants(random_tau(&mut rng))?;
        let (c1, c2) = c_constants(&d);
        let tau = d.tau();
        // the period integrals of an elliptic function with no residue do not
        // depend on the base point, so keep the segments off the lattice
        let along_tau = Segment::new(C::new(0.5, 0.0), C::new(0.5, 0.0) + tau)?;
        let along_one = Segment::new(tau / 2.0, tau / 2.0 + 1.0)?;
        let ia = segment_integral(|z| Ok(d.wp(z)? - c1), &along_tau, 1e-13)?;
        let ib = segment_integral(|z| Ok(d.wp(z)? - c2), &along_one, 1e-13)?;
        a_err = a_err.max((ia - two_pi_i).norm());
        b_err = b_err.max((ib - two_pi_i / tau).norm());
        b_flipped = b_flipped.max((ib + two_pi_i / tau).norm());
    }
    Ok(vec![
        Criterion::below("2a", "integral over [0, tau] of (wp - c1) equals 2 pi i", a_err, 1e-8),
        Criterion::below("2b", "integral over [0, 1] of (wp - c2) equals 2 pi i / tau", b_err, 1e-8),
        Criterion::below("2c", "integral over [0, 1] of (wp - c2) equals -2 pi i / tau", b_flipped, 1e-8),
    ])
}

fn lax(cfg: &SuiteConfig) -> Result<Vec<Criterion>> {
    let data = cfg.data()?;
    let mut rng = cfg.rng(3);
    let mut states = Vec::new();
    let mut zs = Vec::new();
    let mut worst = 0.0_f64;
    for n in 2..=4 {
        let s = sample_state(n, &data, &mut rng)?;
        for _ in 0..5 {
            let z = random_z(&mut rng, &data, 0.1);
            worst = worst.max(lax_residual(&s, z)?);
            zs.push(z);
        }
        states.push(s);
    }
    let cal = calibrate_lax(&states, &zs, 1e-8)?;
    let winners = cal.winners.len() as f64;
    Ok(vec![
        Criterion::below("3a", "Lax residual for N = 2, 3, 4 at 5 random z", worst, 1e-8),
        Criterion::new(
            "3b",
            "calibration scan: only the literal force factor closes the Lax equation",
            winners,
            1.0,
            cal.literal_force_confirmed() && cal.winners.iter().all(|w| w.0 == LITERAL_FORCE_FACTOR),
        ),
    ])
}

fn isospectrality(cfg: &SuiteConfig) -> Result<Vec<Criterion>> {
    let data = cfg.data()?;
    let mut rng = cfg.rng(4);
    let s = sample_tame_state(cfg.n, &data, cfg.t_end, &mut rng)?;
    let z = random_z(&mut rng, &data, 0.2);
    let energy = "relative energy drift at dt";
    let mut opts = IntegrateOptions::new(cfg.t_end, cfg.dt);
    opts.drift_bound = f64::INFINITY;
    let coarse = match integrate_with(&s, &opts) {
        Ok(t) => t,
        Err(Error::Stability { drift, .. }) => return Ok(vec![Criterion::below("4c", energy, drift, cfg.tol)]),
        Err(e) => return Ok(vec![Criterion::error("4c", energy, cfg.tol, &e)]),
    };
    let energy_row = Criterion::below("4c", energy, coarse.stats.max_energy_drift, cfg.tol);
    opts.dt = cfg.dt / 2.0;
    let drifts = integrate_with(&s, &opts).and_then(|fine| Ok((isospectral_drift(&coarse, z)?, isospectral_drift(&fine, z)?)));
    let (a, b) = match drifts {
        Ok(d) => d,
        Err(e) => {
            return Ok(vec![
                Criterion::error("4a", "drift of r_i(z) at dt", 1e-7, &e),
                Criterion::error("4b", "drift ratio dt vs dt/2", 16.0, &e),
                energy_row,
            ])
        }
    };
    Ok(vec![
        Criterion::below("4a", "drift of r_i(z) at dt", a, 1e-7),
        Criterion::new("4b", "drift ratio dt vs dt/2 (fourth order gives 16)", a / b, 16.0, (10.0..26.0).contains(&(a / b))),
        energy_row,
    ])
}

fn laurent(cfg: &SuiteConfig) -> Result<Vec<Criterion>> {
    let data = cfg.data()?;
    let mut rng = cfg.rng(5);
    let mut worst = 0.0_f64;
    for n in 2..=4 {
        let curve = CurveSpec::det(sample_state(n, &data, &mut rng)?);
        for (j, br) in leading_laurent(&curve)?.iter().enumerate() {
            let expected = if j == 0 { 1.0 - n as f64 } else { 1.0 };
            worst = worst.max((br.a - expected).norm());
        }
    }
    Ok(vec![Criterion::below("5", "Laurent exponents {1-N, 1, ..., 1} for N = 2, 3, 4", worst, 1e-4)])
}

fn bridge(cfg: &SuiteConfig) -> Result<Vec<Criterion>> {
    let data = cfg.data()?;
    let mut rng = cfg.rng(6);
    let mut residual = 0.0_f64;
    for n in 1..=3 {
        let curve = CurveSpec::det(sample_state(n, &data, &mut rng)?);
        residual = residual.max(fit_h(&curve, &mut rng)?.residual);
    }
    let s = sample_tame_state(3, &data, cfg.t_end, &mut rng)?;
    let traj = integrate(&s, cfg.t_end, cfg.t_end / 1000.0)?;
    let fit_seed: u64 = rng.gen();
    let fit_at = |idx: usize| fit_h(&CurveSpec::det(traj.states[idx].clone()), &mut ChaCha8Rng::seed_from_u64(fit_seed));
    let base = fit_at(0)?.i;
    let mut drift = 0.0_f64;
    let last = traj.states.len() - 1;
    for idx in [last / 4, last / 2, 3 * last / 4, last] {
        for (a, b) in fit_at(idx)?.i.iter().zip(&base) {
            drift = drift.max((a - b).norm() / (1.0 + b.norm()));
        }
    }
    Ok(vec![
        Criterion::below("6a", "fit_H validation residual for N = 1, 2, 3", residual, 1e-6),
        Criterion::below("6b", "drift of the fitted I along an N = 3 trajectory", drift, 1e-6),
    ])
}

fn two_sheet_curve(cfg: &SuiteConfig, stream: u32) -> Result<CurveSpec> {
    let data = cfg.data()?;
    Ok(CurveSpec::det(sample_state(2, &data, &mut cfg.rng(stream))?))
}

const WORDS: [(i64, i64); 6] = [(1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (1, 2)];

fn integer_periods(cfg: &SuiteConfig) -> Result<Vec<Criterion>> {
    let curve = two_sheet_curve(cfg, 7)?;
    let loops = word_loops(&curve, &WORDS, 0, 0.05)?;
    let mut worst = 0.0_f64;
    for which in [Which::Phi1, Which::Phi2] {
        let diff = DifferentialOnCurve::new(curve.clone(), which);
        for lp in &loops {
            worst = worst.max(phi_period(&diff, lp)?.deviation);
        }
    }
    Ok(vec![Criterion::below("7", "distance to the nearest integer, both differentials, 6 loops, N = 2", worst, 1e-6)])
}

fn degree(cfg: &SuiteConfig) -> Result<Vec<Criterion>> {
    let curve = two_sheet_curve(cfg, 7)?;
    let r = degree_check(&curve)?;
    let sum = r.period_sum.unwrap_or(f64::NAN);
    let err = (sum - r.sheet_count as f64).abs().max((r.sheet_count as f64 - 2.0).abs());
    Ok(vec![Criterion::below("8", "sheet count and period-sum degree agree at 2, N = 2", err, 1e-4)])
}

fn baker(cfg: &SuiteConfig) -> Result<Vec<Criterion>> {
    let data = cfg.data()?;
    let mut rng = cfg.rng(9);
    let tau = data.tau();
    let z = C::new(0.47, 0.0) + 0.53 * tau;
    let (mut coarse_worst, mut ratio_off, mut bloch) = (0.0_f64, 0.0_f64, 0.0_f64);
    for n in [1, 2] {
        let s = sample_tame_state(n, &data, 0.2, &mut rng)?;
        let tr = integrate(&s, 0.2, 1e-3)?;
        let psi = ba_solution(&tr, z, 0)?;
        let w = &psi;
        let grid = GridSpec::away_from_poles(&w, 0.05, 0.06, 0.02, 50, 50, tau)?;
        let coarse = ba_pde_residual(&w, &grid)?;
        let fine = ba_pde_residual(&w, &grid.refined(2))?;
        coarse_worst = coarse_worst.max(coarse);
        ratio_off = ratio_off.max((coarse / fine - 4.0).abs());
        let xs: Vec<C> = (0..4).map(|_| random_z(&mut rng, &data, 0.1)).collect();
        bloch = bloch.max(bloch_spread(&psi, &xs, 0.1)?);
    }
    Ok(vec![
        Criterion::below("9a", "PDE residual on a 50x50 grid, N = 1, 2", coarse_worst, 1e-4),
        Criterion::below("9b", "deviation of the 50x50 / 100x100 residual ratio from 4", ratio_off, 0.6),
        Criterion::below("9c", "spread of the Bloch factor over x", bloch, 1e-6),
    ])
}

fn cusp_bound(cfg: &SuiteConfig) -> Result<Vec<Criterion>> {
    let data = cfg.data()?;
    let opts = CensusOptions::default();
    let mut rng = cfg.rng(10);
    let curve = CurveSpec::det(sample_state(3, &data, &mut rng)?);
    let generic = singularity_census(&curve, &opts)?;
    // the node is placed by shifting I₀, which needs the H form of the curve
    let fitted = curve_from_h(&fit_h(&curve, &mut rng)?.i, data.clone())?;
    let (nodal, _) = nodal_curve(&fitted, &opts)?;
    let nodal = singularity_census(&nodal, &opts)?;
    let mut out = Vec::new();
    for (id, what, report) in [("10a", "generic N = 3 curve", &generic), ("10b", "synthetic nodal N = 3 curve", &nodal)] {
        let v = verify_cusp_bound(report);
        out.push(Criterion::new(id, &format!("margin N - 2n - k on the {what}"), v.margin as f64, 0.0, v.pass == Some(true)));
    }
    let mut tampered = nodal.clone();
    tampered.unclassified.push(Unclassified { z: C::new(0.0, 0.0), k: C::new(0.0, 0.0), reason: "probe".into() });
    let v = verify_cusp_bound(&tampered);
    out.push(Criterion::new(
        "10c",
        "a census with an unclassified point is inconclusive",
        v.pass.map_or(0.0, |_| 1.0),
        0.0,
        v.pass.is_none(),
    ));
    Ok(out)
}

fn base_case(cfg: &SuiteConfig) -> Result<Vec<Criterion>> {
    let mut rng = cfg.rng(11);
    let (mut imag, mut gap, mut holo) = (0.0_f64, f64::INFINITY, f64::INFINITY);
    for _ in 0..100 {
        let d = Arc::new(lattice_invariants(random_tau(&mut rng))?);
        let (p1, p2) = torus_real_basis(&d);
        let (a1, b1) = p1.periods();
        let (a2, b2) = p2.periods();
        imag = [a1, b1, a2, b2].iter().fold(imag, |m, p| m.max(p.im.abs()));
        let r = base_case_check(&d)?;
        gap = gap.min(r.level_gap.min(r.zero_gap));
        holo = holo.min(r.holomorphic_coefficient);
    }
    let sq = Arc::new(lattice_invariants(C::new(0.0, 1.0))?);
    let (p1, p2) = torus_real_basis(&sq);
    let b_err = (p1.b + PI).norm().max((p2.b - C::new(0.0, PI)).norm());
    Ok(vec![
        Criterion::below("11a", "largest imaginary part of the four periods over 100 tau", imag, 1e-10),
        Criterion::above("11b", "smallest zero separation and wp-level gap over 100 tau", gap, 1e-6),
        Criterion::above("11c", "smallest |b1 + i b2| over 100 tau", holo, 0.0),
        Criterion::below("11d", "b1 = -pi and b2 = i pi at tau = i", b_err, 1e-8),
    ])
}

fn leaves(cfg: &SuiteConfig) -> Result<Vec<Criterion>> {
    let data = cfg.data()?;
    let mut rng = cfg.rng(12);
    let (p1, _) = torus_real_basis(&data);
    let zeros = torus_zeros(&p1)?.zeros;
    let (mut drift, mut bad_monotone, mut arc) = (0.0_f64, 0.0, 0.0_f64);
    let mut traced = 0;
    while traced < 4 {
        let start = random_z(&mut rng, &data, 0.1);
        if zeros.iter().any(|&w| data.torus_distance(start - w) < 0.1) {
            continue;
        }
        let leaf = trace_level_set(&p1, start, 0.5)?;
        drift = drift.max(leaf.im_drift());
        arc = arc.max(leaf.arc_mismatch());
        if !leaf.re_monotone() {
            bad_monotone += 1.0;
        }
        traced += 1;
    }
    let mut saddle_err = 0.0_f64;
    for &z0 in &zeros {
        let leaf = trace_level_set(&p1, critical_leaf_start(&p1, z0, 0.01)?, 5.0)?;
        drift = drift.max(leaf.im_drift());
        saddle_err = saddle_err.max(match leaf.end {
            LeafEnd::Saddle { zero } => data.torus_distance(zero - z0),
            _ => f64::INFINITY,
        });
    }
    Ok(vec![
        Criterion::below("12a", "Im F1 drift along generic and critical leaves", drift, 1e-6),
        Criterion::new("12b", "leaves on which Re F1 fails to increase strictly", bad_monotone, 0.0, bad_monotone == 0.0),
        Criterion::below("12c", "arc parameter against Re F1 gain", arc, 1e-6),
        Criterion::below("12d", "saddle stop location against the computed zero", saddle_err, 1e-4),
    ])
}

/// Reruns criteria 1 to 12 and compares the serialized entries.
fn determinism(cfg: &SuiteConfig) -> Result<Vec<Criterion>> {
    let run = || -> String {
        let all: Vec<Criterion> = (1..=12).flat_map(|id| run_criterion(id, cfg)).collect();
        serde_json::to_string(&all).expect("criteria serialize")
    };
    let (a, b) = (run(), run());
    let differ = a.bytes().zip(b.bytes()).filter(|(x, y)| x != y).count() + a.len().abs_diff(b.len());
    Ok(vec![Criterion::new("13", "bytes differing between two runs", differ as f64, 0.0, differ == 0)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SuiteConfig::default().validate().is_ok());
        let bad = SuiteConfig { tau: C::new(0.0, -1.0), ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = SuiteConfig { dt: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(run_suite(&SuiteConfig { n: 0, ..Default::default() }).is_err());
    }

    #[test]
    fn criterion_nan_fails() {
        let c = Criterion::below("x", "", f64::NAN, 1.0);
        assert!(!c.pass && c.measured.is_none());
    }

    #[test]
    fn streams_are_independent_of_order() {
        let cfg = SuiteConfig::default();
        assert_eq!(run_criterion(1, &cfg), run_criterion(1, &cfg));
        let a: f64 = cfg.rng(3).gen();
        let b: f64 = cfg.rng(4).gen();
        assert_ne!(a, b);
    }
}

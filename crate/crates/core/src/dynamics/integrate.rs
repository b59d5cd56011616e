use num_complex::Complex64;

use super::{forces, hamiltonian, lax_residual_with, PhasePoint, DEFAULT_COLLISION_THRESHOLD, LAX_ORIENTATION, LITERAL_FORCE_FACTOR};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct IntegrateOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Force prefactor; the literal equations use 4.
    pub force_factor: f64,
    /// Relative energy drift beyond which integration aborts.
    pub drift_bound: f64,
    /// Spectral parameter at which the Lax residual is recorded, if any.
    pub lax_probe: Option<Complex64>,
    pub collision_threshold: f64,
}

impl IntegrateOptions {
    pub fn new(t_end: f64, dt: f64) -> Self {
        Self {
            dt,
            t_end,
            force_factor: LITERAL_FORCE_FACTOR,
            drift_bound: 1e-2,
            lax_probe: None,
            collision_threshold: DEFAULT_COLLISION_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct TrajectoryStats {
    pub max_energy_drift: f64,
    pub max_lax_residual: f64,
    /// Per-sample relative energy drift `|H(t) − H(0)| / max(|H(0)|, 1)`.
    pub energy_drift: Vec<f64>,
    /// Per-sample Lax residual at the probe (empty without a probe).
    pub lax_residual: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    /// Positions continued without lattice reduction.
    pub unwrapped: Vec<Vec<Complex64>>,
    pub dt: f64,
    pub stats: TrajectoryStats,
}

impl Trajectory {
    pub fn n(&self) -> usize {
        self.states[0].n()
    }
    pub fn last(&self) -> &PhasePoint {
        self.states.last().expect("trajectory has at least one state")
    }
}

/// Fixed-step classical Runge-Kutta for `(ẋ, q̇) = (q, 4 Σ ℘′(xᵢ − xⱼ))`.
pub fn integrate(s0: &PhasePoint, t_end: f64, dt: f64) -> Result<Trajectory> {
    integrate_with(s0, &IntegrateOptions::new(t_end, dt))
}

pub(crate) type State = (Vec<Complex64>, Vec<Complex64>);

pub(crate) fn axpy(y: &[Complex64], a: f64, x: &[Complex64]) -> Vec<Complex64> {
    y.iter().zip(x).map(|(y, x)| y + a * x).collect()
}

/// One RK4 step of size `h` at raw positions.
pub(crate) fn rk4_step(s: &State, h: f64, data: &crate::elliptic::EllipticData, factor: f64) -> Result<State> {
    let f = |st: &State| -> Result<State> { Ok((st.1.clone(), forces(&st.0, data, factor)?)) };
    let k1 = f(s)?;
    let s2 = (axpy(&s.0, h / 2.0, &k1.0), axpy(&s.1, h / 2.0, &k1.1));
    let k2 = f(&s2)?;
    let s3 = (axpy(&s.0, h / 2.0, &k2.0), axpy(&s.1, h / 2.0, &k2.1));
    let k3 = f(&s3)?;
    let s4 = (axpy(&s.0, h, &k3.0), axpy(&s.1, h, &k3.1));
    let k4 = f(&s4)?;
    let combine = |y: &[Complex64], a: &[Complex64], b: &[Complex64], c: &[Complex64], d: &[Complex64]| -> Vec<Complex64> {
        (0..y.len()).map(|i| y[i] + h / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i])).collect()
    };
    Ok((combine(&s.0, &k1.0, &k2.0, &k3.0, &k4.0), combine(&s.1, &k1.1, &k2.1, &k3.1, &k4.1)))
}

pub(crate) fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) || !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Domain(format!("need dt > 0 and t_end > 0, got dt = {dt}, t_end = {t_end}")));
    }
    // Tolerate t_end / dt landing a hair off an integer.
    Ok(((t_end / dt) - 1e-9).ceil().max(1.0) as usize)
}

pub fn integrate_with(s0: &PhasePoint, opts: &IntegrateOptions) -> Result<Trajectory> {
    let steps = step_count(opts.t_end, opts.dt)?;
    let data = s0.data().clone();
    let h0 = hamiltonian(s0)?;
    let scale = h0.norm().max(1.0);
    let mut stats = TrajectoryStats::default();
    let record = |stats: &mut TrajectoryStats, s: &PhasePoint, t: f64| -> Result<()> {
        let drift = (hamiltonian(s).map_err(|e| stamp(e, t))? - h0).norm() / scale;
        stats.energy_drift.push(drift);
        stats.max_energy_drift = stats.max_energy_drift.max(drift);
        if let Some(z) = opts.lax_probe {
            let r = lax_residual_with(s, z, opts.force_factor, LAX_ORIENTATION)?;
            stats.lax_residual.push(r);
            stats.max_lax_residual = stats.max_lax_residual.max(r);
        }
        Ok(())
    };
    let mut times = vec![0.0];
    let mut states = vec![s0.clone()];
    let mut unwrapped = vec![s0.x().to_vec()];
    record(&mut stats, s0, 0.0)?;
    let mut raw: State = (s0.x().to_vec(), s0.q().to_vec());
    for step in 1..=steps {
        let t = step as f64 * opts.dt;
        raw = rk4_step(&raw, opts.dt, &data, opts.force_factor).map_err(|e| stamp(e, t))?;
        if raw.0.iter().chain(&raw.1).any(|v| !v.is_finite()) {
            return Err(Error::Stability { time: t, drift: f64::INFINITY, bound: opts.drift_bound });
        }
        let s = PhasePoint::with_threshold(raw.0.clone(), raw.1.clone(), data.clone(), opts.collision_threshold)
            .map_err(|e| stamp(e, t))?;
        record(&mut stats, &s, t)?;
        let drift = *stats.energy_drift.last().unwrap();
        if drift > opts.drift_bound {
            return Err(Error::Stability { time: t, drift, bound: opts.drift_bound });
        }
        times.push(t);
        states.push(s);
        unwrapped.push(raw.0.clone());
    }
    Ok(Trajectory { times, states, unwrapped, dt: opts.dt, stats })
}

fn stamp(e: Error, t: f64) -> Error {
    match e {
        Error::Collision { i, j, separation, .. } => Error::Collision { i, j, separation, at_time: Some(t) },
        other => other,
    }
}

use std::sync::Arc;

use num_complex::Complex64;

use super::integrate::{axpy, step_count};
use super::lax::lax_from_positions;
use super::{forces, Trajectory, LITERAL_FORCE_FACTOR};
use crate::elliptic::{kr_kernel, EllipticData};
use crate::error::{Error, Result};
use crate::linalg::{self, mat_vec, vec_norm, CMatrix};

const MIN_EIGEN_GAP: f64 = 1e-6;
const MIN_POLE_CLEARANCE: f64 = 1e-2;

/// Joint state `(x, q, C)` with unreduced positions.
#[derive(Debug, Clone)]
struct Joint {
    x: Vec<Complex64>,
    q: Vec<Complex64>,
    c: Vec<Complex64>,
}

fn joint_rhs(s: &Joint, data: &EllipticData, z: Complex64) -> Result<Joint> {
    let m = lax_from_positions(&s.x, &s.q, data, z)?.m;
    Ok(Joint {
        x: s.q.clone(),
        q: forces(&s.x, data, LITERAL_FORCE_FACTOR)?,
        c: mat_vec(&m, &s.c),
    })
}

fn joint_axpy(s: &Joint, a: f64, k: &Joint) -> Joint {
    Joint {
        x: axpy(&s.x, a, &k.x),
        q: axpy(&s.q, a, &k.q),
        c: axpy(&s.c, a, &k.c),
    }
}

fn joint_step(s: &Joint, h: f64, data: &EllipticData, z: Complex64) -> Result<Joint> {
    let k1 = joint_rhs(s, data, z)?;
    let k2 = joint_rhs(&joint_axpy(s, h / 2.0, &k1), data, z)?;
    let k3 = joint_rhs(&joint_axpy(s, h / 2.0, &k2), data, z)?;
    let k4 = joint_rhs(&joint_axpy(s, h, &k3), data, z)?;
    let mut out = s.clone();
    for (y, [a, b, c, d]) in [
        (&mut out.x, [&k1.x, &k2.x, &k3.x, &k4.x]),
        (&mut out.q, [&k1.q, &k2.q, &k3.q, &k4.q]),
        (&mut out.c, [&k1.c, &k2.c, &k3.c, &k4.c]),
    ] {
        for i in 0..y.len() {
            y[i] += h / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]);
        }
    }
    Ok(out)
}

/// Eigenvalue of `l` nearest `target`, with the gap to the rest.
fn nearest_eigenvalue(l: &CMatrix, target: Complex64) -> Result<(Complex64, f64)> {
    let ev = linalg::eigenvalues(l)?;
    let (idx, _) = ev
        .iter()
        .enumerate()
        .map(|(i, e)| (i, (e - target).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty spectrum");
    let gap = ev.iter().enumerate().filter(|&(i, _)| i != idx).map(|(_, e)| (e - ev[idx]).norm()).fold(f64::INFINITY, f64::min);
    Ok((ev[idx], gap))
}

/// The Baker-Akhiezer function
/// `ψ(x, t) = Σ cᵢ(t) F(x − xᵢ(t), z) e^{kx + k²t}` along a trajectory,
/// with `(L + k)C = 0` and `∂ₜC = MC`.
#[derive(Debug, Clone)]
pub struct BakerAkhiezer {
    data: Arc<EllipticData>,
    z: Complex64,
    k: Complex64,
    dt: f64,
    t_end: f64,
    states: Vec<Joint>,
    max_eigen_residual: f64,
    min_gap: f64,
}

/// Builds `ψ` for the eigenvalue `−k` of `L(0, z)` with index `branch` in
/// the sorted spectrum. `C` is propagated jointly with the particles by the
/// same fixed-step scheme and re-projected onto the eigenline of `L(t, z)`
/// after every step.
pub fn ba_solution(traj: &Trajectory, z: Complex64, branch: usize) -> Result<BakerAkhiezer> {
    let s0 = &traj.states[0];
    let data = s0.data().clone();
    let n = s0.n();
    if branch >= n {
        return Err(Error::Domain(format!("branch {branch} out of range for {n} sheets")));
    }
    let t_end = *traj.times.last().expect("nonempty trajectory");
    let steps = step_count(t_end, traj.dt)?;
    let x0 = traj.unwrapped[0].clone();
    let l0 = lax_from_positions(&x0, s0.q(), &data, z)?.l;
    let ev = linalg::eigenvalues(&l0)?;
    let lambda0 = ev[branch];
    let gap0 = ev.iter().enumerate().filter(|&(i, _)| i != branch).map(|(_, e)| (e - lambda0).norm()).fold(f64::INFINITY, f64::min);
    if gap0 < MIN_EIGEN_GAP {
        return Err(Error::BranchCrossing { time: 0.0, gap: gap0 });
    }
    let mut c = linalg::eigenvector(&l0, lambda0, &vec![Complex64::new(1.0, 0.0); n])?;
    let scale = c.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let pivot = *c.iter().find(|v| v.norm() > 1e-12 * scale).expect("nonzero eigenvector");
    for v in c.iter_mut() {
        *v /= pivot;
    }
    let mut state = Joint { x: x0, q: s0.q().to_vec(), c };
    let mut states = vec![state.clone()];
    let mut lambda = lambda0;
    let mut max_eigen_residual = 0.0_f64;
    let mut min_gap = gap0;
    for step in 1..=steps {
        let t = step as f64 * traj.dt;
        state = joint_step(&state, traj.dt, &data, z)?;
        let l = lax_from_positions(&state.x, &state.q, &data, z)?.l;
        let (next, gap) = nearest_eigenvalue(&l, lambda)?;
        if gap < MIN_EIGEN_GAP {
            return Err(Error::BranchCrossing { time: t, gap });
        }
        min_gap = min_gap.min(gap);
        lambda = next;
        // ‖(L + k)C‖ / ‖C‖ with k = −λ₀, before re-projection
        let lc = mat_vec(&l, &state.c);
        let res: Vec<Complex64> = lc.iter().zip(&state.c).map(|(a, b)| a - lambda0 * b).collect();
        max_eigen_residual = max_eigen_residual.max(vec_norm(&res) / vec_norm(&state.c));
        let v = linalg::eigenvector(&l, lambda, &state.c)?;
        let overlap: Complex64 = v.iter().zip(&state.c).map(|(a, b)| a.conj() * b).sum();
        state.c = v.iter().map(|a| a * overlap).collect();
        states.push(state.clone());
    }
    Ok(BakerAkhiezer {
        data,
        z,
        k: -lambda0,
        dt: traj.dt,
        t_end: steps as f64 * traj.dt,
        states,
        max_eigen_residual,
        min_gap,
    })
}

impl BakerAkhiezer {
    pub fn k(&self) -> Complex64 {
        self.k
    }
    pub fn z(&self) -> Complex64 {
        self.z
    }
    pub fn t_end(&self) -> f64 {
        self.t_end
    }
    /// Largest `‖(L + k)C‖ / ‖C‖` seen before re-projection.
    pub fn max_eigen_residual(&self) -> f64 {
        self.max_eigen_residual
    }
    /// Smallest gap between the tracked eigenvalue and the rest.
    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    fn state_at(&self, t: f64) -> Result<Joint> {
        if !(0.0..=self.t_end + 1e-12).contains(&t) {
            return Err(Error::Grid(format!("time {t} outside [0, {}]", self.t_end)));
        }
        let idx = ((t / self.dt).floor() as usize).min(self.states.len() - 1);
        let h = t - idx as f64 * self.dt;
        if h.abs() < 1e-14 {
            return Ok(self.states[idx].clone());
        }
        joint_step(&self.states[idx], h, &self.data, self.z)
    }

    /// Positions `xᵢ(t)` (unreduced).
    pub fn positions(&self, t: f64) -> Result<Vec<Complex64>> {
        Ok(self.state_at(t)?.x)
    }

    pub fn eval(&self, x: Complex64, t: f64) -> Result<Complex64> {
        let s = self.state_at(t)?;
        self.eval_with(&s, x, t)
    }

    fn eval_with(&self, s: &Joint, x: Complex64, t: f64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (ci, xi) in s.c.iter().zip(&s.x) {
            acc += ci * kr_kernel(x - xi, self.z, &self.data)?;
        }
        Ok(acc * (self.k * x + self.k * self.k * t).exp())
    }

    /// `ψ(x + 1, t) / ψ(x, t)`.
    pub fn bloch_factor(&self, x: Complex64, t: f64) -> Result<Complex64> {
        let s = self.state_at(t)?;
        Ok(self.eval_with(&s, x + 1.0, t)? / self.eval_with(&s, x, t)?)
    }
}

/// A function of `(x, t)` paired with the potential of its heat-type
/// equation `(∂ₜ − ∂ₓ² + u)ψ = 0`, evaluated one time slice at a time.
pub trait WaveFunction {
    type Slice: TimeSlice;
    fn slice(&self, t: f64) -> Result<Self::Slice>;
}

pub trait TimeSlice {
    fn psi(&self, x: Complex64) -> Result<Complex64>;
    fn potential(&self, x: Complex64) -> Result<Complex64>;
    /// Distance from `x` to the nearest pole of `u` on the torus.
    fn pole_distance(&self, x: Complex64) -> f64;
}

/// `ψ(·, t)` with the particle data at time `t` resolved.
pub struct BakerSlice<'a> {
    owner: &'a BakerAkhiezer,
    state: Joint,
    t: f64,
}

impl TimeSlice for BakerSlice<'_> {
    fn psi(&self, x: Complex64) -> Result<Complex64> {
        self.owner.eval_with(&self.state, x, self.t)
    }

    /// `u = 2 Σ ℘(x − xᵢ(t))`.
    fn potential(&self, x: Complex64) -> Result<Complex64> {
        let mut u = Complex64::new(0.0, 0.0);
        for xi in &self.state.x {
            u += 2.0 * self.owner.data.wp(x - xi)?;
        }
        Ok(u)
    }

    fn pole_distance(&self, x: Complex64) -> f64 {
        self.state.x.iter().map(|xi| self.owner.data.torus_distance(x - xi)).fold(f64::INFINITY, f64::min)
    }
}

impl<'a> WaveFunction for &'a BakerAkhiezer {
    type Slice = BakerSlice<'a>;
    fn slice(&self, t: f64) -> Result<BakerSlice<'a>> {
        Ok(BakerSlice { owner: self, state: self.state_at(t)?, t })
    }
}

/// A rectangular grid: `nx` points on the segment `[x_start, x_end]` times
/// `nt` points on `[t_start, t_end]`. Finite-difference spacings equal the
/// grid spacings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_start: Complex64,
    pub x_end: Complex64,
    pub nx: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub nt: usize,
}

impl GridSpec {
    /// A real-direction window of length `width` over `[t_start, t_end]`,
    /// centred where the poles of `u` stay farthest away.
    pub fn away_from_poles<W: WaveFunction>(w: &W, t_start: f64, t_end: f64, width: f64, nx: usize, nt: usize, tau: Complex64) -> Result<Self> {
        let mesh = 24;
        let slices = (0..=4).map(|j| w.slice(t_start + (t_end - t_start) * j as f64 / 4.0)).collect::<Result<Vec<_>>>()?;
        let mut best = (f64::NEG_INFINITY, Complex64::new(0.0, 0.0));
        for a in 0..mesh {
            for b in 0..mesh {
                let centre = (a as f64 + 0.5) / mesh as f64 + tau * ((b as f64 + 0.5) / mesh as f64);
                let mut clearance = f64::INFINITY;
                for slice in &slices {
                    for s in [-0.5, 0.0, 0.5] {
                        clearance = clearance.min(slice.pole_distance(centre + s * width));
                    }
                }
                if clearance > best.0 {
                    best = (clearance, centre);
                }
            }
        }
        let half = Complex64::new(width / 2.0, 0.0);
        Ok(Self { x_start: best.1 - half, x_end: best.1 + half, nx, t_start, t_end, nt })
    }

    /// Same extent with `factor` times as many intervals in each direction.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            nx: (self.nx - 1) * factor + 1,
            nt: (self.nt - 1) * factor + 1,
            ..*self
        }
    }
}

/// `max |(∂ₜ − ∂ₓ² + u)ψ| / max |ψ|` over the grid, by central differences.
pub fn ba_pde_residual<W: WaveFunction>(w: &W, grid: &GridSpec) -> Result<f64> {
    if grid.nx < 2 || grid.nt < 2 || grid.x_start == grid.x_end || grid.t_end <= grid.t_start {
        return Err(Error::Grid("degenerate grid".into()));
    }
    let hx = (grid.x_end - grid.x_start) / (grid.nx - 1) as f64;
    let ht = (grid.t_end - grid.t_start) / (grid.nt - 1) as f64;
    let mut worst = 0.0_f64;
    let mut peak = 0.0_f64;
    let mut before = w.slice(grid.t_start - ht)?;
    let mut now = w.slice(grid.t_start)?;
    for it in 0..grid.nt {
        let t = grid.t_start + ht * it as f64;
        let after = w.slice(t + ht)?;
        for ix in 0..grid.nx {
            let x = grid.x_start + hx * ix as f64;
            for (slice, xs, ts) in [(&now, x, t), (&now, x + hx, t), (&now, x - hx, t), (&after, x, t + ht), (&before, x, t - ht)] {
                let d = slice.pole_distance(xs);
                if d < MIN_POLE_CLEARANCE {
                    return Err(Error::Grid(format!("stencil point {xs} at t = {ts} is {d:.2e} from a pole")));
                }
            }
            let p = now.psi(x)?;
            let dxx = (now.psi(x + hx)? - 2.0 * p + now.psi(x - hx)?) / (hx * hx);
            let dt = (after.psi(x)? - before.psi(x)?) / (2.0 * ht);
            let r = dt - dxx + now.potential(x)? * p;
            worst = worst.max(r.norm());
            peak = peak.max(p.norm());
        }
        before = now;
        now = after;
    }
    Ok(worst / peak)
}

/// Largest relative spread of the Bloch factor `ψ(x + 1)/ψ(x)` over `xs`.
pub fn bloch_spread(psi: &BakerAkhiezer, xs: &[Complex64], t: f64) -> Result<f64> {
    let factors = xs.iter().map(|&x| psi.bloch_factor(x, t)).collect::<Result<Vec<_>>>()?;
    let f0 = factors[0];
    Ok(factors.iter().map(|f| (f - f0).norm() / f0.norm()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, sample_tame_state, PhasePoint};
    use crate::elliptic::lattice_invariants;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    struct FreeWave {
        k: Complex64,
    }

    struct FreeSlice {
        k: Complex64,
        t: f64,
    }

    impl TimeSlice for FreeSlice {
        fn psi(&self, x: Complex64) -> Result<Complex64> {
            Ok((self.k * x + self.k * self.k * self.t).exp())
        }
        fn potential(&self, _: Complex64) -> Result<Complex64> {
            Ok(Complex64::new(0.0, 0.0))
        }
        fn pole_distance(&self, _: Complex64) -> f64 {
            f64::INFINITY
        }
    }

    impl WaveFunction for FreeWave {
        type Slice = FreeSlice;
        fn slice(&self, t: f64) -> Result<FreeSlice> {
            Ok(FreeSlice { k: self.k, t })
        }
    }

    fn grid() -> GridSpec {
        GridSpec { x_start: c(0.3, 0.4), x_end: c(0.35, 0.4), nx: 50, t_start: 0.02, t_end: 0.07, nt: 50 }
    }

    #[test]
    fn exact_free_solution_leaves_only_truncation() {
        // e^{kx + k²t} solves ψₜ = ψₓₓ, leaving difference error of size
        // |k|⁴ h² and roundoff.
        let w = FreeWave { k: c(0.3, -0.2) };
        let r = ba_pde_residual(&w, &grid()).unwrap();
        assert!(r < 1e-8, "{r}");
    }

    #[test]
    fn single_particle_matches_closed_form() {
        let d = Arc::new(lattice_invariants(c(0.0, 1.0)).unwrap());
        let (x0, q0) = (c(0.1, 0.2), c(0.3, -0.1));
        let s = PhasePoint::new(vec![x0], vec![q0], d.clone()).unwrap();
        let tr = integrate(&s, 0.2, 1e-3).unwrap();
        let z = c(0.45, 0.55);
        let psi = ba_solution(&tr, z, 0).unwrap();
        assert!((psi.k() + q0 / 2.0).norm() < 1e-15);
        let wp_z = d.wp(z).unwrap();
        for (x, t) in [(c(0.6, 0.7), 0.0), (c(0.55, 0.65), 0.1234), (c(0.7, 0.6), 0.2)] {
            // c(t) = e^{℘(z)t}
            let k = psi.k();
            let expected = (wp_z * t).exp() * kr_kernel(x - x0 - q0 * t, z, &d).unwrap() * (k * x + k * k * t).exp();
            let got = psi.eval(x, t).unwrap();
            assert!((got - expected).norm() < 1e-10 * expected.norm(), "{got} vs {expected}");
        }
    }

    #[test]
    fn residual_refines_quadratically() {
        let d = Arc::new(lattice_invariants(c(0.0, 1.0)).unwrap());
        for n in [1, 2] {
            let s = sample_tame_state(n, &d, 0.2, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
            let tr = integrate(&s, 0.2, 1e-3).unwrap();
            let psi = ba_solution(&tr, c(0.47, 0.53), 0).unwrap();
            assert!(psi.max_eigen_residual() < 1e-6);
            let psi = &psi;
            let g = GridSpec::away_from_poles(&psi, 0.05, 0.07, 0.02, 50, 50, d.tau()).unwrap();
            let coarse = ba_pde_residual(&psi, &g).unwrap();
            let fine = ba_pde_residual(&psi, &g.refined(2)).unwrap();
            assert!(coarse < 1e-4, "n = {n}: {coarse}");
            let ratio = coarse / fine;
            assert!((3.5..4.6).contains(&ratio), "n = {n}: ratio {ratio}");
        }
    }

    #[test]
    fn bloch_factor_is_independent_of_x() {
        let d = Arc::new(lattice_invariants(c(0.1, 1.05)).unwrap());
        let s = sample_tame_state(2, &d, 0.1, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let tr = integrate(&s, 0.1, 1e-3).unwrap();
        let psi = ba_solution(&tr, c(0.3, 0.4), 1).unwrap();
        let xs = [c(0.21, 0.13), c(0.37, 0.71), c(-0.2, 0.33), c(0.05, -0.4)];
        assert!(bloch_spread(&psi, &xs, 0.05).unwrap() < 1e-6);
    }

    #[test]
    fn grid_touching_pole_is_rejected() {
        let d = Arc::new(lattice_invariants(c(0.0, 1.0)).unwrap());
        let s = PhasePoint::new(vec![c(0.1, 0.2)], vec![c(0.0, 0.0)], d).unwrap();
        let tr = integrate(&s, 0.1, 1e-3).unwrap();
        let psi = ba_solution(&tr, c(0.45, 0.55), 0).unwrap();
        let g = GridSpec { x_start: c(0.05, 0.2), x_end: c(0.15, 0.2), nx: 11, t_start: 0.01, t_end: 0.05, nt: 5 };
        assert!(matches!(ba_pde_residual(&&psi, &g), Err(Error::Grid(_))));
    }
}

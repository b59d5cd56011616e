use num_complex::Complex64;

use super::{forces, PhasePoint, LITERAL_FORCE_FACTOR};
use crate::elliptic::{kr_kernel, kr_kernel_dx, EllipticData};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Which commutator the time derivative of `L` is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Commutator {
    /// `L̇ = LM − ML`
    LM,
    /// `L̇ = ML − LM`
    ML,
}

impl Commutator {
    pub fn apply(self, l: &CMatrix, m: &CMatrix) -> CMatrix {
        match self {
            Commutator::LM => l * m - m * l,
            Commutator::ML => m * l - l * m,
        }
    }
}

/// The orientation under which the literal equations of motion satisfy the
/// Lax equation. `[L, M]` vanishes only after flipping the sign of time.
pub const LAX_ORIENTATION: Commutator = Commutator::ML;

#[derive(Debug, Clone)]
pub struct LaxMatrices {
    pub z: Complex64,
    pub l: CMatrix,
    pub m: CMatrix,
}

pub fn lax_pair(s: &PhasePoint, z: Complex64) -> Result<LaxMatrices> {
    lax_from_positions(s.x(), s.q(), s.data(), z)
}

fn entry_pole(err: Error, name: &str, i: usize, j: usize) -> Error {
    match err {
        Error::Pole { lattice_point, distance, .. } => Error::Pole {
            what: format!("{name}[{i},{j}]"),
            lattice_point,
            distance,
        },
        other => other,
    }
}

/// `L` and `M` at raw positions; unreduced positions give gauge-equivalent
/// matrices.
pub(crate) fn lax_from_positions(x: &[Complex64], q: &[Complex64], data: &EllipticData, z: Complex64) -> Result<LaxMatrices> {
    let n = x.len();
    let wp_z = data.wp(z).map_err(|e| entry_pole(e, "M", 0, 0))?;
    let mut l = CMatrix::zeros(n, n);
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        l[(i, i)] = q[i] / 2.0;
        let mut diag = wp_z;
        for j in 0..n {
            if i == j {
                continue;
            }
            let xij = x[i] - x[j];
            diag -= 2.0 * data.wp(xij).map_err(|e| entry_pole(e, "M", i, i))?;
            l[(i, j)] = kr_kernel(xij, z, data).map_err(|e| entry_pole(e, "L", i, j))?;
            m[(i, j)] = -2.0 * kr_kernel_dx(xij, z, data).map_err(|e| entry_pole(e, "M", i, j))?;
        }
        m[(i, i)] = diag;
    }
    Ok(LaxMatrices { z, l, m })
}

/// `L̇` assembled by the chain rule from the equations of motion.
fn lax_derivative(s: &PhasePoint, z: Complex64, factor: f64) -> Result<CMatrix> {
    let (x, q, data) = (s.x(), s.q(), s.data());
    let n = x.len();
    let dq = forces(x, data, factor)?;
    let mut dl = CMatrix::zeros(n, n);
    for i in 0..n {
        dl[(i, i)] = dq[i] / 2.0;
        for j in 0..n {
            if i != j {
                dl[(i, j)] = (q[i] - q[j]) * kr_kernel_dx(x[i] - x[j], z, data)?;
            }
        }
    }
    Ok(dl)
}

/// Frobenius norm of `L̇ − (ML − LM)` for the literal equations of motion.
pub fn lax_residual(s: &PhasePoint, z: Complex64) -> Result<f64> {
    lax_residual_with(s, z, LITERAL_FORCE_FACTOR, LAX_ORIENTATION)
}

pub fn lax_residual_with(s: &PhasePoint, z: Complex64, factor: f64, orientation: Commutator) -> Result<f64> {
    let lm = lax_pair(s, z)?;
    let dl = lax_derivative(s, z, factor)?;
    Ok((dl - orientation.apply(&lm.l, &lm.m)).norm())
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CalibrationReport {
    /// `(force factor, orientation, largest residual over the probes)`.
    pub variants: Vec<(f64, Commutator, f64)>,
    pub winners: Vec<(f64, Commutator)>,
}

impl CalibrationReport {
    /// True iff the literal force factor is the only factor that works.
    pub fn literal_force_confirmed(&self) -> bool {
        !self.winners.is_empty() && self.winners.iter().all(|(f, _)| *f == LITERAL_FORCE_FACTOR)
    }
}

/// Scans force factors `{±2, ±4}` in both commutator orientations over the
/// probe states and spectral parameters. A variant wins when its residual
/// stays below `threshold` everywhere.
pub fn calibrate_lax(states: &[PhasePoint], zs: &[Complex64], threshold: f64) -> Result<CalibrationReport> {
    let mut variants = Vec::new();
    for factor in [2.0, -2.0, 4.0, -4.0] {
        for orientation in [Commutator::LM, Commutator::ML] {
            let mut worst = 0.0_f64;
            for s in states {
                for &z in zs {
                    worst = worst.max(lax_residual_with(s, z, factor, orientation)?);
                }
            }
            variants.push((factor, orientation, worst));
        }
    }
    let winners = variants.iter().filter(|v| v.2 < threshold).map(|v| (v.0, v.1)).collect();
    Ok(CalibrationReport { variants, winners })
}

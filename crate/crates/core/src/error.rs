use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("series for {constant} did not converge (last term {last_term:e}, tol {tol:e})")]
    Accuracy {
        constant: &'static str,
        last_term: f64,
        tol: f64,
    },

    #[error("quadrature did not converge: last estimates {previous} and {last}")]
    Quadrature { previous: Complex64, last: Complex64 },

    #[error("pole: {what} at distance {distance:e} from lattice point {lattice_point}")]
    Pole {
        what: String,
        lattice_point: Complex64,
        distance: f64,
    },

    #[error("derivative order {0} not supported (max 12)")]
    UnsupportedOrder(usize),

    #[error("particles {i} and {j} collide (separation {separation:e}){}", at_time.map(|t| format!(" at t = {t}")).unwrap_or_default())]
    Collision {
        i: usize,
        j: usize,
        separation: f64,
        at_time: Option<f64>,
    },

    #[error("integration unstable at t = {time}: relative energy drift {drift:e} exceeds {bound:e}")]
    Stability { time: f64, drift: f64, bound: f64 },

    #[error("eigenvalue branch crossing at t = {time} (gap {gap:e})")]
    BranchCrossing { time: f64, gap: f64 },

    #[error("grid error: {0}")]
    Grid(String),

    #[error("root tracking ambiguous: {0}")]
    Tracking(String),

    #[error("ill-conditioned sample system (condition {condition:e}); retry with a new seed")]
    Sampling { condition: f64 },

    #[error("branch point near {z} on the continuation path (gap {gap:e})")]
    BranchPoint { z: Complex64, gap: f64 },

    #[error("lifted loop failed to close within {0} repetitions")]
    Inconsistent(usize),

    #[error("unsupported curve: {0}")]
    UnsupportedCurve(String),

    #[error("consistency failure: {0}")]
    Consistency(String),

    #[error("root search failed: {0}")]
    Search(String),
}

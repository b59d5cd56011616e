//! Numerical toolkit for the elliptic Calogero-Moser system.
//!
//! The crate is layered bottom-up:
//!
//! - [`elliptic`] and [`quadrature`]: Weierstrass functions on `C/(Z + τZ)`,
//!   the Lax kernel and line integrals.
//! - [`dynamics`]: the N-particle flow, its Lax pair and the Baker-Akhiezer
//!   function built from it.
//! - [`spectral`]: spectral curves `det(kI + L(z)) = 0`, their `H(φ)`
//!   parametrization, monodromy and singular points.
//! - [`periods`]: integer-period differentials on spectral curves and the
//!   real-period differentials of a torus.
//! - [`suite`]: the acceptance criteria as a reproducible report.

// negated comparisons are deliberate: NaN has to fail them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod elliptic;
pub mod error;
pub mod export;
pub mod linalg;
pub mod periods;
pub mod poly;
pub mod quadrature;
pub mod spectral;
pub mod suite;

#[cfg(test)]
mod testing;

pub use error::{Error, Result};
pub use num_complex::Complex64;

//! Pseudospectral Kawahara solver and a numerical laboratory for
//! I-method energies, multiplier bounds, dispersive estimates and the
//! cubic ill-posedness iterate.
//!
//! Equation: `u_t + μ u_xxx + u_xxxxx + u u_x = 0` on a periodic box,
//! dispersion relation `ω(ξ) = μξ³ − ξ⁵`.

pub mod analysis;
pub mod error;
pub mod illposed;
pub mod imethod;
pub mod solver;
pub mod spectral;
pub mod sum;

pub use error::{Error, Result};

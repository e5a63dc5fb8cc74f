//! Wave-trace (Balian-Bloch) invariants of analytic plane billiard domains at
//! iterated bouncing-ball and dihedral orbits, computed by a diagrammatic
//! stationary-phase engine, together with the inverse algorithm that recovers
//! the boundary's Taylor coefficients from them.

pub mod error;
pub mod billiard;
pub mod domain;
pub mod feynman;
pub mod hessian;
pub mod invariants;
pub mod inverse;
pub mod jets;

pub use error::{Error, Result};

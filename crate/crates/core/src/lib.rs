//! Subgroup-blind learning of linear dynamical systems under fairness
//! objectives.
//!
//! The learning problems are posed as non-commutative polynomial programs
//! over hermitian operator variables and relaxed into a hierarchy of
//! semidefinite programs built from moment and localizing matrices. The
//! crate is `no_std` (it needs `alloc`); file formats, the CLI and timing
//! live in the `ncfair` companion crate.
//!
//! Module map:
//!
//! * [`ncpoly`]: words, canonical moment indices and polynomials.
//! * [`npa`]: moment/localizing matrices, relaxation assembly, flatness.
//! * [`sdp`]: block SDP model and an operator-splitting solver.
//! * [`fairlds`]: the subgroup-fair, instant-fair and unfair models.
//! * [`datagen`]: ground-truth simulation and under-representation bias.
//! * [`metrics`]: NRMSE, residual covariances, annuity premium.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod datagen;
pub mod error;
pub mod fairlds;
pub mod metrics;
pub mod ncpoly;
pub mod npa;
pub mod sdp;
pub mod trajectory;

mod floats;

pub use error::{Error, Result};
pub use trajectory::{ObservationKey, TrajectorySet};

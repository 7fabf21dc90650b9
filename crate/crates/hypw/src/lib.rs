//! Numerical laboratory for complete minimal and Willmore surfaces in the
//! upper half-space model of hyperbolic 3-space.
//!
//! The crate is organised bottom-up:
//!
//! - [`hyp3`] — points, hyperbolic distance and the isometry group;
//! - [`surface`] — graph, revolution and mesh surfaces with Euclidean and
//!   hyperbolic shape data;
//! - [`functionals`] — Willmore energy, weighted and localized energies,
//!   renormalized area;
//! - [`curves`] — boundary curves at infinity and their regularity diagnostics;
//! - [`solve`] — minimal graph and catenoid solvers, Jacobi operator, gluing;
//! - [`conformal`] — isothermal charts and the identities that hold in them;
//! - [`bubble`] — concentration scans and blow-up analysis of families.

// `!(x > 0.0)` is used deliberately so that NaN inputs are rejected, and
// index loops over several parallel arrays read more clearly than zips.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bubble;
pub mod conformal;
pub mod curves;
pub mod error;
pub mod functionals;
pub mod hyp3;
pub mod linalg;
pub mod solve;
pub mod surface;

pub use error::Error;

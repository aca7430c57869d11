//! Numerical laboratory for two-parametric delta-prime point interactions
//! realized by Schroedinger operators with localized rank-two perturbations.
//!
//! The crate builds the perturbation pair, designs coupling potentials for
//! target interface parameters, solves the associated boundary value problem,
//! and measures the norm-resolvent convergence rate of the singular family
//! toward its point-interaction limit.

// Stencil and substitution loops read better with explicit indices.
#![allow(clippy::needless_range_loop)]

pub mod csvio;
pub mod design;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod halfbound;
pub mod linalg;
pub mod pair;
pub mod resolvent;

pub use error::{Error, Result};

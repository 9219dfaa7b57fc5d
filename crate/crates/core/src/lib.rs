//! Generalized Hawkes processes built by inverting random time changes of a
//! unit Poisson process, together with their Girsanov densities, entropy
//! functionals and Monte Carlo checks of the associated identities.
//!
//! The crate is organised bottom-up:
//!
//! - [`pointprocess`]: finite configurations and counting paths;
//! - [`intensity`]: predictable intensities, compensators and inverses;
//! - [`simulation`]: unit Poisson paths, inversion and thinning simulators,
//!   forward time changes;
//! - [`girsanov`]: log-densities and entropy integrals along a path;
//! - [`verification`]: statistical experiments producing [`verification::ExperimentReport`]s.

pub mod error;
pub mod girsanov;
pub mod intensity;
pub mod pointprocess;
pub mod quadrature;
pub mod roots;
pub mod simulation;
pub mod verification;

pub use error::{Error, Result};
pub use intensity::{ClassicalHawkes, Intensity, IntensityModel, KernelSpec, PhiSpec, PiecewiseConstant, Tolerances};
pub use pointprocess::Configuration;

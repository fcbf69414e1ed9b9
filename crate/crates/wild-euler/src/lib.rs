//! Numerical constructions around weak solutions of the axisymmetric
//! swirl-free Euler equations and their compressible planar counterpart.
//!
//! The crate verifies, at desk scale, a family of explicit objects:
//! coordinate identities connecting the two weak formulations, an explicit
//! subsolution of the associated linear system and its energy threshold, the
//! energy-admissibility ODE for the profile `χ`, a Burgers-driven
//! symmetry-breaking subsolution, and an instrumented plane-wave (laminate)
//! perturbation iteration over the constraint-set geometry.
//!
//! See the `book/` guide for a narrative walk-through; the `wild-euler`
//! binary exposes the scenario runner.

pub mod admissibility;
pub mod breaking;
pub mod constraint;
pub mod coords;
mod error;
pub mod fields;
pub mod laminate;
pub mod plot;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod subsolution;

pub use error::{Error, Result};

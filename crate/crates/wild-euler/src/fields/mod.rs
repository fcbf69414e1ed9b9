//! Grid containers over `Ω = (δ, R) × 𝕋`, finite-difference calculus,
//! quadrature, and the weak-form residual machinery.
//!
//! Fields are immutable value types after construction; every evaluation in
//! this module is pure.

mod bump;
mod grid;
mod weak;

pub use bump::{sample_bumps, BumpTestFn, ScalarTestEval, TestCombination, TestKind};
pub use grid::{Axis, Domain, GridField, Rank, Weight};
pub use weak::{test_mass, weak_residual, weak_residual_combined, WeakFields, WeakForm};
pub(crate) use weak::{visit_initial, visit_support};

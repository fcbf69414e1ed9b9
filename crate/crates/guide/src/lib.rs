//! Doctest harness for the book under `book/`: every chapter is included as
//! module documentation, so `cargo test --doc` compiles and runs each fenced
//! Rust snippet. mdbook itself does not execute snippets against external
//! crates; this keeps the book honest without a preprocessor. One module per
//! chapter makes a failing snippet point at its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/coordinates.md")]
pub mod coordinates {}

#[doc = include_str!("../../../book/src/grids-and-weak-forms.md")]
pub mod grids_and_weak_forms {}

#[doc = include_str!("../../../book/src/constraint-geometry.md")]
pub mod constraint_geometry {}

#[doc = include_str!("../../../book/src/explicit-subsolutions.md")]
pub mod explicit_subsolutions {}

#[doc = include_str!("../../../book/src/energy-admissibility.md")]
pub mod energy_admissibility {}

#[doc = include_str!("../../../book/src/symmetry-breaking.md")]
pub mod symmetry_breaking {}

#[doc = include_str!("../../../book/src/laminate-iteration.md")]
pub mod laminate_iteration {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

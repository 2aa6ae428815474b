//! Certificate-producing ε-net verification that no four-region spherical
//! partition beats the propeller partition's moment objective `(9/4)π²`.
//!
//! * [`rigor`]: floating point with explicit rounding budgets.
//! * [`geometry`]: closed-form spherical triangle and partition formulas.
//! * [`constraints`]: the four box-elimination tests.
//! * [`traversal`]: grid refinement, certificates and their verifier.
//! * [`cli`]: the `propver` command line.

pub mod cli;
pub mod constraints;
pub mod geometry;
pub mod rigor;
pub mod traversal;

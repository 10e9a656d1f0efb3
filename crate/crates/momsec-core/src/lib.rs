//! Core engine for verifying geometric compatibility conditions of Lie
//! algebroids, Dirac structures, momentum sections and their sigma-model
//! realizations.
//!
//! Everything in this crate is `no_std` (alloc only) and deterministic:
//! expression fields are evaluated with exact second-order jets, residuals
//! are max-norms over explicit sample points, and all randomness goes
//! through the seeded generator in [`sample`].
//!
//! Index conventions used throughout (fixed once, validated by the
//! cross-check tests in each module):
//!
//! * antisymmetric tensors store canonical components on strictly
//!   increasing index tuples; evaluation contracts full antisymmetrized
//!   components,
//! * interior products contract the first slot: `(i_X w)_J = X^l w_{lJ}`,
//! * `pi_sharp(al)^m = al_l pi^{lm}` and `omega_flat(X)_m = omega_{ml} X^l`,
//! * the Schouten bracket is the unique biderivation with `[X,Y]` the Lie
//!   bracket and `[f,Q] = -i_{df} Q`,
//! * connections act on fiber indices as `+omega` up / `-omega` down.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod algebroid;
pub mod courant;
pub mod expr;
pub mod graded;
pub mod jet;
pub mod linalg;
pub mod momentum;
pub mod report;
pub mod sample;
pub mod sigma;
pub mod tensor;

pub use expr::{Chart, Expr, Symbols};
pub use jet::Jet;
pub use report::{CheckEntry, CheckReport, Status};

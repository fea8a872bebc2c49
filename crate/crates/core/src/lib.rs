//! Proving and refuting likely invariants of small imperative programs by
//! compiling them to finite-domain constraint networks.
//!
//! The pipeline is `frontend` (parse) → `ssa` → `compile` (constraint
//! network built from `solver` primitives and the `combinators`) → `refute`.
//! `interpreter` is the concrete semantics used as ground truth and
//! `inference` produces candidate invariants from execution traces.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod combinators;
pub mod compile;
pub mod frontend;
pub mod inference;
pub mod interpreter;
pub mod refute;
pub mod solver;
pub mod ssa;
pub mod width;

pub use width::IntWidth;

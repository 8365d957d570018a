//! Musielak-Orlicz function calculus, anisotropic Orlicz-Sobolev norms and a
//! direct-method solver for anisotropic Neumann problems.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod expr;
pub mod mo;
pub mod quad;
pub mod sobolev;
pub mod solver;
pub mod spaces;
pub mod verdict;

pub use error::{Error, Result};
pub use mo::{AnisotropicFamily, MoFunction, ScalarField};
pub use verdict::{Verdict, Witness};

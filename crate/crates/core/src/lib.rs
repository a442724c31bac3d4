//! Equivariant spectral flow and APS indices of self-adjoint matrix families.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aps;
pub mod cli;
pub mod cplx;
pub mod error;
pub mod eta;
pub mod family;
pub mod flow;
pub mod linalg;
pub mod models;
pub mod parallel;
pub mod random;
pub mod symmetry;
pub mod verify;

pub use error::{Result, SpecError};

//! Numerical toolkit for the elliptic q-Lamé difference operator, its
//! commuting family and the spectral curve of the commuting pair.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bethe;
pub mod config;
pub mod diffop;
pub mod elliptic;
pub mod error;
pub mod family;
pub mod report;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;

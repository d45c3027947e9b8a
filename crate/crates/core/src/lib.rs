//! Matrix-free inexact Newton methods built on the Conjugate Residual
//! method with sufficient-descent checks and backtracking line search.

pub mod cr;
pub mod error;
pub mod exec;
pub mod harness;
pub mod inner;
pub mod line_search;
pub mod linalg;
pub mod oracle;
pub mod problems;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};

//! Regularity diagnostics for incompressible Navier-Stokes flows.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod field;
pub mod io;
pub mod pressure;
pub mod report;
pub mod rescale;
pub mod solver;

pub use error::{Error, Result};

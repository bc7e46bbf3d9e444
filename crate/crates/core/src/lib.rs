//! P2/P1 finite elements for the stationary Stokes equations on the unit
//! square with slip or leak boundary conditions of friction type on the top
//! side, solved by a projected Uzawa iteration.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod assembly;
pub mod cli;
pub mod discretization;
pub mod element;
pub mod error;
pub mod exec;
pub mod friction;
pub mod io;
pub mod mesh;
pub mod quadrature;
pub mod saddle;
pub mod sparse;
pub mod spaces;
pub mod uzawa;

pub use error::{Error, Result};

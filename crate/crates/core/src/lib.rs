//! Numerical laboratory for weighted multilinear Poincaré and Sobolev
//! inequalities on homogeneous Carnot groups of step at most two.

// `!(x > 0.0)` deliberately rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod carnot;
pub mod cli;
pub mod error;
pub mod jet;
pub mod lab;
pub mod operators;
pub mod quad;
pub mod reduce;
pub mod rng;
pub mod weights;

pub use error::{LabError, Result};

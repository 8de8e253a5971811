//! Numerical laboratory for the weighted dyadic square function on `[0, 1]`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bellman;
pub mod corpus;
pub mod dyadic;
pub mod error;
pub mod experiments;
pub mod io;
pub mod operators;
pub mod sparse;
pub mod weights;

pub use dyadic::{DyadicInterval, StepFunction};
pub use error::{Error, Result};
pub use weights::Weight;

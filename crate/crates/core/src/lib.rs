// negated comparisons also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cascade;
pub mod dyadic;
pub mod error;
pub mod euler;
pub mod fourier;
pub mod harness;
pub mod paracalc;

pub use error::{Error, Result};

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod embedding;
pub mod error;
pub mod experiments;
pub mod filtering;
pub mod kernels;
pub mod linalg;
pub mod points;
pub mod posterior;

pub use error::{Error, Result};

// Negated float comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod inference;
pub mod levy_copula;
pub mod numerics;
pub mod process_model;
pub mod simulation;

pub use error::{Error, Result};

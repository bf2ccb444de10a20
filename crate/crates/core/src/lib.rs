// Negated comparisons are how NaN inputs get rejected throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod branch;
pub mod cli;
pub mod config;
pub mod error;
pub mod extremal;
pub mod fiber;
mod scalar;
pub mod shooting;
pub mod snapshot;
pub mod space;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};

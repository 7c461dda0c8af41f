//! Numerical laboratory for weak values of a charged particle in classical
//! electromagnetic fields under arbitrary gauges.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bohmian;
pub mod error;
pub mod fields;
pub mod gauge;
pub mod labcli;
pub mod operators;
pub mod propagator;
pub mod sensing;
pub mod states;
pub mod units;
pub mod weakeval;

pub use error::{Error, Result};

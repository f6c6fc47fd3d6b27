//! Metropolis–Hastings with randomized acceptance ratios, including
//! penalty-type and exchange-type kernels for intractable targets, and a
//! coupling harness that measures when exact and approximate chains part.

// `!(x > 0.0)` is used on purpose so NaN lands in the rejecting branch
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod algorithms;
pub mod config;
pub mod coupling;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod kernel;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod suite;
pub mod table;
pub mod targets;
pub mod verify;

pub use error::{Error, Result};

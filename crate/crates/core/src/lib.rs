//! Linear precoder design for downlink joint-transmission network MIMO when
//! helper base stations may miss the transmission because of backhaul delay.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backhaul;
pub mod codebook;
pub mod config;
pub mod error;
pub mod gp;
pub mod linalg;
pub mod model;
pub mod montecarlo;
pub mod report;
pub mod selftest;
pub mod sip;

pub use error::{Error, Result};

//! Simulation of OFDM links impaired by oscillator phase noise, and a receiver
//! that compensates it by picking the best-matching phase trajectory from a
//! precomputed codebook.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod codebook;
pub mod coding;
pub mod compensator;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod phn;
pub mod phy;

pub use error::{Error, Result};
pub use numerics::C64;

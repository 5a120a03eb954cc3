//! A from-scratch biasless feedforward-network engine and a BPSK-over-AWGN
//! detection testbed, with numerical validators for the asymptotic
//! misclassification limits of wide random networks.

pub mod bpsk;
pub mod erf;
pub mod error;
pub mod fnn;
pub mod harness;
pub mod rng;
pub mod theory;
pub mod train;

pub use error::Error;

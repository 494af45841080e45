//! States that are positive on pure tensors (POPT), their reproduction by
//! ordinary quantum states with relabeled measurements, and CHSH tooling.
//!
//! Pipeline: [`popt`] validates a candidate operator, [`chojam`] turns it into a
//! linear map and splits off its unital part, [`quantize`] builds the quantum
//! simulation, [`games`] evaluates CHSH values and bounds, and [`reconstruct`]
//! recovers an operator from black-box probabilities.

#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod matkernel;
pub mod random;
pub mod povm;
pub mod popt;
pub mod chojam;
pub mod quantize;
pub mod games;
pub mod reconstruct;
pub mod format;
pub mod cli;

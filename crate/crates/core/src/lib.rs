//! Mismatched rate functions, exact distortion-ball probabilities and
//! generalized AEP simulation on finite alphabets.

pub mod aep_harness;
pub mod ball_prob;
pub mod conjugate;
pub mod error;
pub mod exact;
pub mod extended;
pub mod measures;
pub mod modelfile;
pub mod process_rate;
pub mod rate_core;

pub use error::{Error, Result};
pub use exact::DistortionLevel;
pub use extended::{ExtendedReal, LogProb};

//! Weighted ℓ1 recovery for heterogeneous wideband compressive spectrum sensing.
//!
//! The wideband is a sequence of contiguous blocks whose bands are occupied
//! independently with a block-specific probability ([`spectrum`]). A
//! sub-Gaussian matrix compresses the frequency-domain vector into a few noisy
//! measurements ([`sensing`]), which are decoded by block-weighted ℓ1
//! minimization or one of the baselines ([`solvers`]) and thresholded into
//! occupancy decisions ([`detection`]). [`bounds`] holds the closed-form
//! calculators that accompany the method.

pub mod bounds;
pub mod detection;
pub mod error;
pub mod seeding;
pub mod sensing;
pub mod solvers;
pub mod spectrum;

pub use error::{Error, Result};

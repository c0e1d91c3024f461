//! Multi-label re-sampling by per-sample replication weights.
//!
//! Given an `m × n` binary label matrix, [`optimizer::optimize`] solves for
//! nonnegative sample weights that push every under-represented label toward
//! a target positive ratio, [`optimizer::integerize`] turns them into
//! replication counts, and [`resample::materialize`] builds the resulting
//! sub-balance dataset. [`metrics`] scores multi-label predictions and
//! [`trainer`] provides a small logistic model for measuring the effect of
//! training on the sub-balance set.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod experiment;
mod json;
pub mod metrics;
pub mod optimizer;
pub mod resample;
pub mod trainer;

pub use error::{Error, Result};

/// Independent child seed for `stream` (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

//! A small CPU autodiff stack specialized to one architecture: spectrally
//! normalized strided convolutions, self-attention over spatial positions,
//! and a dropout MLP head, trained with Adam on binary cross-entropy.
//!
//! Everything is deterministic given a seed: initialization, batch order,
//! dropout masks, and Monte Carlo prediction reproduce bitwise.

pub mod adam;
pub mod attn;
pub mod checkpoint;
pub mod conv;
pub mod dense;
pub mod loss;
pub mod model;
pub mod snorm;
pub mod tensor;
pub mod train;

#[cfg(test)]
mod testutil;

use thiserror::Error;

/// A tensor was handed to an op whose contract its shape violates.
#[derive(Debug, Error)]
#[error("shape mismatch: {context}")]
pub struct ShapeMismatch {
    pub context: String,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Stream `index` of a run seed. Must agree with the derivation the data
/// pipeline uses so one run seed fans out consistently across crates.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ index.wrapping_add(1).wrapping_mul(0x9E3779B97F4A7C15))
}

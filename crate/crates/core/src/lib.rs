//! Near-end listening enhancement engine.
//!
//! Speech energy is reallocated across time and 64 ERB-rate bands by a
//! causal convolutional generator, then renormalised so the modified speech
//! keeps the power of the original.

pub mod container;
pub mod dsp;
pub mod erb;
pub mod generator;
mod error;
mod gain;
mod matrix;
pub mod metrics;
pub mod noise;
pub mod normalize;
pub mod pipeline;
pub mod ssdrc;
pub mod synth;

pub use error::{Error, Result};
pub use gain::{GainMatrix, RAW_GAIN_MAX, RAW_GAIN_MIN};
pub use matrix::Matrix;

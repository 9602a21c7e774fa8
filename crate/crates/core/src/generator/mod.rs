//! Causal convolutional generator: compressed ERB features of speech and
//! noise in, one raw gain per band out, frame by frame.
//!
//! Each block is a causal 1-D convolution over time (left-padded with zeros
//! at stream start), cumulative layer normalization and a leaky ReLU. Two
//! per-frame dense layers follow; the second one's output `u` is mapped to
//! `exp(3 tanh(u))`.

mod arch;
mod net;
mod weights;

pub use arch::{Architecture, ConvBlock, CLN_VAR_FLOOR, LRELU_SLOPE, NELE_G_V1, NELE_G_V1_PARAMS};
pub use net::{bounded_exp, forward_frame, forward_utterance, forward_utterance_with, ClnMode, GeneratorState};
pub use weights::{load_weights, GeneratorWeights};

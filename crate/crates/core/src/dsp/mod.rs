//! Signals, framing, STFT/iSTFT, WAV I/O and the noisy-reverberant
//! observation model.

mod mix;
mod signal;
mod stft;
mod wav;

pub(crate) use mix::noise_segment;
pub use mix::{convolve, mix_observed, mix_observed_parts, unit_impulse, Mixture};
pub use signal::{AudioSignal, SAMPLE_RATE};
pub use stft::{istft, stft, Spectrogram, StftConfig, Window};
pub use wav::{read_wav, write_wav, WavFormat};

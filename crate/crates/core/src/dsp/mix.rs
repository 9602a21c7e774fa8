//! Observation model: reverberant speech plus scaled additive noise.
//!
//! Energies for SNR scaling are taken over the whole utterance (no voice
//! activity gating). Noise shorter than the reverberant speech is tiled
//! cyclically; longer noise is cut at offset 0, or at a uniformly random
//! offset when a seed is given.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::signal::{energy, AudioSignal, SAMPLE_RATE};
use crate::error::{Error, Result};

/// Components of a simulated observation, kept for SNR bookkeeping.
#[derive(Debug, Clone)]
pub struct Mixture {
    pub observed: AudioSignal,
    pub reverberant: AudioSignal,
    pub scaled_noise: AudioSignal,
    pub noise_gain: f64,
}

impl Mixture {
    /// `10 log10(E_reverberant / E_scaled_noise)`.
    pub fn measured_snr_db(&self) -> f64 {
        10.0 * (self.reverberant.energy() / self.scaled_noise.energy()).log10()
    }
}

/// Full linear convolution, via FFT for long inputs.
pub fn convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let out_len = x.len() + h.len() - 1;
    if x.len().min(h.len()) <= 64 {
        let mut out = vec![0.0; out_len];
        for (i, xv) in x.iter().enumerate() {
            for (j, hv) in h.iter().enumerate() {
                out[i + j] += xv * hv;
            }
        }
        return out;
    }
    let n = out_len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let lift = |v: &[f64]| {
        let mut buf: Vec<Complex64> = v.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        buf.resize(n, Complex64::new(0.0, 0.0));
        buf
    };
    let mut a = lift(x);
    let mut b = lift(h);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (p, q) in a.iter_mut().zip(&b) {
        *p *= q;
    }
    inv.process(&mut a);
    a[..out_len].iter().map(|c| c.re / n as f64).collect()
}

pub(crate) fn noise_segment(noise: &[f64], len: usize, seed: Option<u64>) -> Vec<f64> {
    if noise.len() >= len {
        let offset = match seed {
            Some(s) if noise.len() > len => {
                ChaCha8Rng::seed_from_u64(s).random_range(0..=noise.len() - len)
            }
            _ => 0,
        };
        noise[offset..offset + len].to_vec()
    } else {
        noise.iter().copied().cycle().take(len).collect()
    }
}

/// Simulates `o = y * h + g w` and returns all components.
pub fn mix_observed_parts(
    speech: &AudioSignal,
    rir: &AudioSignal,
    noise: &AudioSignal,
    snr_db: f64,
    seed: Option<u64>,
) -> Result<Mixture> {
    for s in [speech, rir, noise] {
        if s.sample_rate() != SAMPLE_RATE {
            return Err(Error::WrongSampleRate(s.sample_rate()));
        }
        if s.is_empty() {
            return Err(Error::EmptySignal);
        }
    }
    if !snr_db.is_finite() {
        return Err(Error::BadConfig(format!("snr must be finite, got {snr_db}")));
    }
    let reverberant = convolve(speech.samples(), rir.samples());
    let speech_energy = energy(&reverberant);
    if speech_energy <= 0.0 {
        return Err(Error::SilentSpeech);
    }
    let segment = noise_segment(noise.samples(), reverberant.len(), seed);
    let noise_energy = energy(&segment);
    if noise_energy <= 0.0 {
        return Err(Error::SilentNoise);
    }
    let noise_gain = (speech_energy / (noise_energy * 10f64.powf(snr_db / 10.0))).sqrt();
    let scaled: Vec<f64> = segment.iter().map(|w| w * noise_gain).collect();
    let observed = reverberant.iter().zip(&scaled).map(|(a, b)| a + b).collect();
    Ok(Mixture {
        observed: AudioSignal::new(observed, SAMPLE_RATE)?,
        reverberant: AudioSignal::new(reverberant, SAMPLE_RATE)?,
        scaled_noise: AudioSignal::new(scaled, SAMPLE_RATE)?,
        noise_gain,
    })
}

pub fn mix_observed(
    speech: &AudioSignal,
    rir: &AudioSignal,
    noise: &AudioSignal,
    snr_db: f64,
    seed: Option<u64>,
) -> Result<AudioSignal> {
    Ok(mix_observed_parts(speech, rir, noise, snr_db, seed)?.observed)
}

/// Single-tap unit impulse, the identity room.
pub fn unit_impulse() -> AudioSignal {
    AudioSignal::from_samples(vec![1.0])
}

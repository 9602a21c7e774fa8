//! Deterministic desk-scale corpus: speech-like utterances, maskers and
//! synthetic room impulse responses.
//!
//! The "speech" is a formant-filtered harmonic source chopped into
//! syllables with fricative onsets, short gaps and occasional pauses. It has
//! the properties the evaluation needs (silent stretches, low-frequency
//! dominated long-term spectrum, syllabic modulation) without shipping
//! recordings.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dsp::{AudioSignal, SAMPLE_RATE};

const FS: f64 = SAMPLE_RATE as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    White,
    /// White noise through a one-pole low-pass, roughly speech-shaped.
    SpeechShaped,
    /// Sum of six independent synthetic talkers.
    Babble,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::White => "white",
            NoiseKind::SpeechShaped => "ssn",
            NoiseKind::Babble => "babble",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "white" => Some(NoiseKind::White),
            "ssn" | "speech-shaped" => Some(NoiseKind::SpeechShaped),
            "babble" => Some(NoiseKind::Babble),
            _ => None,
        }
    }
}

fn resonance(f: f64, center: f64, bandwidth: f64) -> f64 {
    let d = (f - center) / bandwidth;
    1.0 / (1.0 + d * d)
}

fn high_passed_noise(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len + 2).map(|_| StandardNormal.sample(rng)).collect();
    // Second difference: +12 dB/octave, fricative-like.
    (0..len).map(|n| (raw[n + 2] - 2.0 * raw[n + 1] + raw[n]) / 6f64.sqrt()).collect()
}

fn raised_cosine_envelope(len: usize, ramp: usize) -> impl Fn(usize) -> f64 {
    let ramp = ramp.min(len / 2).max(1);
    move |n| {
        if n < ramp {
            0.5 - 0.5 * (PI * n as f64 / ramp as f64).cos()
        } else if n + ramp >= len {
            0.5 - 0.5 * (PI * (len - n) as f64 / ramp as f64).cos()
        } else {
            1.0
        }
    }
}

/// Speech-like utterance of `duration_secs`, RMS-normalised to 0.05.
pub fn synth_speech(duration_secs: f64, seed: u64) -> AudioSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = (duration_secs * FS).round() as usize;
    let mut out = vec![0.0; len];
    let base_f0 = rng.random_range(95.0..230.0);
    let mut t = (rng.random_range(0.05..0.15) * FS) as usize;

    let tail = (0.15 * FS) as usize;
    while t + tail < len {
        if rng.random_bool(0.4) {
            let n = (rng.random_range(0.04..0.09) * FS) as usize;
            let amp = rng.random_range(0.03..0.1);
            let env = raised_cosine_envelope(n, (0.01 * FS) as usize);
            for (i, v) in high_passed_noise(&mut rng, n).into_iter().enumerate() {
                if t + i < len {
                    out[t + i] += amp * env(i) * v;
                }
            }
            t += n;
        }

        let n = (rng.random_range(0.12..0.28) * FS) as usize;
        let amp = rng.random_range(0.15..0.45);
        let f1 = [rng.random_range(300.0..800.0), rng.random_range(300.0..800.0)];
        let f2 = [rng.random_range(900.0..2300.0), rng.random_range(900.0..2300.0)];
        let f3 = rng.random_range(2400.0..3200.0);
        let f0_start = base_f0 * rng.random_range(0.9..1.15);
        let f0_end = f0_start * rng.random_range(0.85..1.05);
        let env = raised_cosine_envelope(n, (0.02 * FS) as usize);
        let mut phase = 0.0f64;
        let mut weights: Vec<f64> = Vec::new();
        for i in 0..n {
            if t + i >= len {
                break;
            }
            let frac = i as f64 / n as f64;
            let f0 = f0_start + (f0_end - f0_start) * frac;
            if i % 80 == 0 {
                let fa = f1[0] + (f1[1] - f1[0]) * frac;
                let fb = f2[0] + (f2[1] - f2[0]) * frac;
                let n_harm = (7600.0 / f0) as usize;
                weights = (1..=n_harm)
                    .map(|h| {
                        let f = h as f64 * f0;
                        let shape = resonance(f, fa, 90.0)
                            + 0.6 * resonance(f, fb, 130.0)
                            + 0.3 * resonance(f, f3, 180.0)
                            + 0.02;
                        shape / (h as f64).sqrt()
                    })
                    .collect();
            }
            phase += 2.0 * PI * f0 / FS;
            if phase > 2.0 * PI {
                phase -= 2.0 * PI;
            }
            let s: f64 = weights
                .iter()
                .enumerate()
                .map(|(h, w)| w * ((h + 1) as f64 * phase).sin())
                .sum();
            out[t + i] += amp * env(i) * s;
        }
        t += n;
        let gap = if rng.random_bool(0.2) {
            rng.random_range(0.15..0.35)
        } else {
            rng.random_range(0.02..0.08)
        };
        t += (gap * FS) as usize;
    }
    normalize_rms(out, 0.05)
}

fn normalize_rms(x: Vec<f64>, target: f64) -> AudioSignal {
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt();
    let g = if rms > 0.0 { target / rms } else { 0.0 };
    AudioSignal::from_samples(x.into_iter().map(|v| v * g).collect())
}

/// Masker noise of the given kind, RMS-normalised to 0.05.
pub fn synth_noise(kind: NoiseKind, duration_secs: f64, seed: u64) -> AudioSignal {
    let len = (duration_secs * FS).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let x: Vec<f64> = match kind {
        NoiseKind::White => (0..len).map(|_| StandardNormal.sample(&mut rng)).collect(),
        NoiseKind::SpeechShaped => {
            let mut y = 0.0;
            let mut prev = 0.0;
            (0..len)
                .map(|_| {
                    let w: f64 = StandardNormal.sample(&mut rng);
                    y = 0.9 * y + w;
                    // Gentle DC removal.
                    let out = y - 0.98 * prev;
                    prev = y;
                    out
                })
                .collect()
        }
        NoiseKind::Babble => {
            let mut acc = vec![0.0; len];
            for talker in 0..6u64 {
                let s = synth_speech(duration_secs, seed.wrapping_mul(31).wrapping_add(talker + 1000));
                for (a, v) in acc.iter_mut().zip(s.samples()) {
                    *a += v;
                }
            }
            acc
        }
    };
    normalize_rms(x, 0.05)
}

/// Exponentially decaying Gaussian tail behind a unit direct path.
pub fn synth_rir(t60_secs: f64, seed: u64) -> AudioSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = (t60_secs * FS).ceil() as usize + 1;
    let decay = 3.0 * 10f64.ln() / (t60_secs * FS);
    let mut h: Vec<f64> = (0..len)
        .map(|n| {
            let g: f64 = StandardNormal.sample(&mut rng);
            0.3 * g * (-decay * n as f64).exp()
        })
        .collect();
    h[0] = 1.0;
    AudioSignal::from_samples(h)
}

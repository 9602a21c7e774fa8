//! Noise PSD tracking from a reference microphone, and controlled corruption
//! of the estimate.
//!
//! The tracker is an MCRA-style approximation of IMCRA:
//!
//! 1. recursive smoothing of the periodogram, `S = 0.8 S + 0.2 |W|^2`;
//! 2. exact sliding minimum `S_min` of `S` over the last 1.5 s;
//! 3. a bin is speech-like when `S > 5 * 1.66 * S_min`, and the speech
//!    presence probability is smoothed with `p = 0.2 p + 0.8 I`;
//! 4. the noise estimate is averaged with a presence-dependent constant
//!    `a = 0.95 + 0.05 p`, i.e. frozen while speech is present;
//! 5. the output is `max(lambda, 1.66 * S_min, 1e-10)`, so a rising noise
//!    floor is picked up once the minimum window has forgotten the old level.
//!
//! Every step only looks at past frames, so the estimate is causal.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::container::TensorFile;
use crate::dsp::{stft, AudioSignal, StftConfig, SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::Matrix;

pub const PSD_FLOOR: f64 = 1e-10;
pub const PSD_ARCH_ID: &str = "nele-psd-v1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerParams {
    pub smoothing: f64,
    pub min_window_secs: f64,
    pub bias: f64,
    pub presence_threshold: f64,
    pub presence_smoothing: f64,
    pub noise_smoothing: f64,
}

impl Default for TrackerParams {
    fn default() -> Self {
        Self {
            smoothing: 0.8,
            min_window_secs: 1.5,
            bias: 1.66,
            presence_threshold: 5.0,
            presence_smoothing: 0.2,
            noise_smoothing: 0.95,
        }
    }
}

/// Per-stream tracker state. Feed it one power frame at a time.
#[derive(Debug, Clone)]
pub struct NoiseTracker {
    params: TrackerParams,
    window: usize,
    frame: usize,
    smoothed: Vec<f64>,
    presence: Vec<f64>,
    noise: Vec<f64>,
    // Monotone deques of (frame, S) per bin for the sliding minimum.
    minima: Vec<VecDeque<(usize, f64)>>,
}

impl NoiseTracker {
    pub fn new(n_bins: usize, hop: usize, params: TrackerParams) -> Self {
        let frame_secs = hop as f64 / SAMPLE_RATE as f64;
        let window = ((params.min_window_secs / frame_secs).floor() as usize).max(1);
        Self {
            params,
            window,
            frame: 0,
            smoothed: vec![0.0; n_bins],
            presence: vec![0.0; n_bins],
            noise: vec![0.0; n_bins],
            minima: vec![VecDeque::new(); n_bins],
        }
    }

    /// Length of the minimum-search window in frames.
    pub fn window_frames(&self) -> usize {
        self.window
    }

    pub fn push(&mut self, power: &[f64]) -> Vec<f64> {
        assert_eq!(power.len(), self.smoothed.len(), "bin count changed mid-stream");
        let p = self.params;
        let first = self.frame == 0;
        let mut out = Vec::with_capacity(power.len());
        for (k, &pw) in power.iter().enumerate() {
            let s = if first {
                pw
            } else {
                p.smoothing * self.smoothed[k] + (1.0 - p.smoothing) * pw
            };
            self.smoothed[k] = s;

            let dq = &mut self.minima[k];
            while dq.back().is_some_and(|&(_, v)| v >= s) {
                dq.pop_back();
            }
            dq.push_back((self.frame, s));
            while dq.front().is_some_and(|&(f, _)| f + self.window <= self.frame) {
                dq.pop_front();
            }
            let s_min = dq.front().map_or(s, |&(_, v)| v);

            let floor = p.bias * s_min;
            let speech = if s > p.presence_threshold * floor { 1.0 } else { 0.0 };
            self.presence[k] =
                p.presence_smoothing * self.presence[k] + (1.0 - p.presence_smoothing) * speech;
            self.noise[k] = if first {
                pw
            } else {
                let a = p.noise_smoothing + (1.0 - p.noise_smoothing) * self.presence[k];
                a * self.noise[k] + (1.0 - a) * pw
            };
            out.push(self.noise[k].max(floor).max(PSD_FLOOR));
        }
        self.frame += 1;
        out
    }
}

/// Estimated noise power `W^2(m, k)`, floored at [`PSD_FLOOR`].
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePsd(Matrix);

impl NoisePsd {
    /// Wraps a power matrix, flooring every entry.
    pub fn new(psd: Matrix) -> Result<Self> {
        if psd.as_slice().iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::BadConfig("PSD must be finite and non-negative".into()));
        }
        Ok(Self(psd.map(|v| v.max(PSD_FLOOR))))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn frames(&self) -> usize {
        self.0.rows()
    }

    pub fn bins(&self) -> usize {
        self.0.cols()
    }

    /// Serializes into the shared `NELW` container (values stored as f32).
    pub fn to_bytes(&self) -> Vec<u8> {
        let data: Vec<f32> = self.0.as_slice().iter().map(|&v| v as f32).collect();
        TensorFile::pack(PSD_ARCH_ID, [("psd", vec![self.frames(), self.bins()], &data[..])])
            .expect("shape matches data")
            .to_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let file = TensorFile::from_bytes(bytes)?;
        if file.manifest.arch_id != PSD_ARCH_ID {
            return Err(Error::BadManifest(format!(
                "expected arch {PSD_ARCH_ID}, found {}",
                file.manifest.arch_id
            )));
        }
        let (entry, data) = file
            .tensor("psd")
            .ok_or_else(|| Error::BadManifest("missing tensor 'psd'".into()))?;
        if entry.shape.len() != 2 {
            return Err(Error::ShapeMismatch(format!("psd shape {:?}", entry.shape)));
        }
        let m = Matrix::from_vec(
            entry.shape[0],
            entry.shape[1],
            data.iter().map(|&v| f64::from(v)).collect(),
        )
        .expect("numel checked by container");
        Self::new(m)
    }
}

pub fn estimate_noise_psd(reference: &AudioSignal, config: &StftConfig) -> Result<NoisePsd> {
    estimate_noise_psd_with(reference, config, TrackerParams::default())
}

pub fn estimate_noise_psd_with(
    reference: &AudioSignal,
    config: &StftConfig,
    params: TrackerParams,
) -> Result<NoisePsd> {
    let needed = 2 * config.window_length;
    if reference.len() < needed {
        return Err(Error::SignalTooShort {
            needed,
            got: reference.len(),
        });
    }
    let spec = stft(reference, config)?;
    let mut tracker = NoiseTracker::new(spec.n_bins(), config.hop, params);
    let mut out = Matrix::zeros(spec.n_frames(), spec.n_bins());
    for m in 0..spec.n_frames() {
        let est = tracker.push(&spec.power_frame(m));
        out.row_mut(m).copy_from_slice(&est);
    }
    Ok(NoisePsd(out))
}

/// Replaces each bin independently with probability `error_rate_percent / 100`
/// by `exp(N)`, `N` Gaussian with the mean and variance of `log W^2` over the
/// whole matrix.
pub fn inject_estimation_error(psd: &NoisePsd, error_rate_percent: f64, seed: u64) -> Result<NoisePsd> {
    if !(0.0..=100.0).contains(&error_rate_percent) {
        return Err(Error::BadErrorRate(error_rate_percent));
    }
    if error_rate_percent == 0.0 {
        return Ok(psd.clone());
    }
    let logs: Vec<f64> = psd.0.as_slice().iter().map(|v| v.ln()).collect();
    let n = logs.len().max(1) as f64;
    let mean = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n;
    let normal = Normal::new(mean, var.sqrt()).expect("finite variance");
    let rate = error_rate_percent / 100.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = psd.0.clone();
    for v in out.as_mut_slice() {
        // Draw both every time so the stream layout does not depend on the rate.
        let hit = rng.random::<f64>() < rate;
        let replacement = normal.sample(&mut rng).exp();
        if hit {
            *v = replacement.max(PSD_FLOOR);
        }
    }
    Ok(NoisePsd(out))
}

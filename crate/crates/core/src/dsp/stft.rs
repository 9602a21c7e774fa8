//! Short-time Fourier analysis and weighted overlap-add synthesis.
//!
//! Framing policy: the signal is zero-padded at the head by
//! `window_length - hop` samples and at the tail by at least as many (rounded
//! up to a whole hop), so every input sample is covered by the same number of
//! frames. [`istft`] trims the same padding, so `istft(stft(x))` has the
//! length of `x`.
//!
//! Synthesis divides the overlap-added, re-windowed frames by
//! `sum_m w^2(n - m*hop)`. With the default square-root periodic Hann window
//! that sum is exactly 1 at 50 % overlap, which also makes the transform
//! energy preserving: `sum |x|^2 == stft.parseval_energy()`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::signal::{AudioSignal, SAMPLE_RATE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    /// Square root of the periodic Hann window. Squared, it overlap-adds to 1
    /// at 50 % overlap.
    SqrtHann,
    /// Periodic (DFT-even) Hann window. Sums (not squares) to 1 at 50 %.
    Hann,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        (0..len)
            .map(|n| {
                let hann = 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos();
                match self {
                    Window::Hann => hann,
                    Window::SqrtHann => hann.sqrt(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftConfig {
    pub window_length: usize,
    pub hop: usize,
    pub fft_size: usize,
    pub window: Window,
}

impl Default for StftConfig {
    /// 32 ms window, 16 ms hop at 16 kHz.
    fn default() -> Self {
        Self {
            window_length: 512,
            hop: 256,
            fft_size: 512,
            window: Window::SqrtHann,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_length == 0 || self.hop == 0 {
            return Err(Error::BadConfig("window and hop must be non-zero".into()));
        }
        if self.hop * 2 != self.window_length {
            return Err(Error::BadConfig(format!(
                "hop ({}) must be half the window length ({})",
                self.hop, self.window_length
            )));
        }
        if self.fft_size < self.window_length {
            return Err(Error::BadConfig(format!(
                "fft size {} shorter than window {}",
                self.fft_size, self.window_length
            )));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Zero samples prepended before the first frame.
    pub fn head_padding(&self) -> usize {
        self.window_length - self.hop
    }

    /// Number of frames produced for a signal of `len` samples.
    pub fn n_frames(&self, len: usize) -> usize {
        // Covering [0, head + len + head) with frames of `window_length`
        // spaced by `hop`.
        let needed = 2 * self.head_padding() + len;
        let span = needed.saturating_sub(self.window_length);
        span.div_ceil(self.hop) + 1
    }

    fn padded_len(&self, len: usize) -> usize {
        (self.n_frames(len) - 1) * self.hop + self.window_length
    }

    /// Centre frequency of bin `k` in Hz.
    pub fn bin_frequency(&self, k: usize) -> f64 {
        k as f64 * SAMPLE_RATE as f64 / self.fft_size as f64
    }

    /// Time in seconds (relative to the first input sample) at the centre of frame `m`.
    pub fn frame_center_secs(&self, m: usize) -> f64 {
        let center = (m * self.hop + self.window_length / 2) as f64 - self.head_padding() as f64;
        center / SAMPLE_RATE as f64
    }
}

/// Complex one-sided STFT, `n_frames x n_bins`, row-major by frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    frames: Vec<Complex64>,
    n_frames: usize,
    n_bins: usize,
    config: StftConfig,
    signal_len: usize,
}

impl Spectrogram {
    pub fn new(
        frames: Vec<Complex64>,
        n_frames: usize,
        config: StftConfig,
        signal_len: usize,
    ) -> Result<Self> {
        config.validate()?;
        let n_bins = config.n_bins();
        if frames.len() != n_frames * n_bins {
            return Err(Error::MalformedSpectrogram(format!(
                "{} values for {} frames of {} bins",
                frames.len(),
                n_frames,
                n_bins
            )));
        }
        if n_frames != config.n_frames(signal_len) {
            return Err(Error::MalformedSpectrogram(format!(
                "{} frames cannot describe a signal of {} samples",
                n_frames, signal_len
            )));
        }
        if frames.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::MalformedSpectrogram("non-finite bin".into()));
        }
        Ok(Self {
            frames,
            n_frames,
            n_bins,
            config,
            signal_len,
        })
    }

    pub fn zeros(config: StftConfig, signal_len: usize) -> Self {
        let n_frames = config.n_frames(signal_len);
        let n_bins = config.n_bins();
        Self {
            frames: vec![Complex64::new(0.0, 0.0); n_frames * n_bins],
            n_frames,
            n_bins,
            config,
            signal_len,
        }
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    pub fn frame(&self, m: usize) -> &[Complex64] {
        &self.frames[m * self.n_bins..(m + 1) * self.n_bins]
    }

    pub fn frame_mut(&mut self, m: usize) -> &mut [Complex64] {
        &mut self.frames[m * self.n_bins..(m + 1) * self.n_bins]
    }

    pub fn iter_frames(&self) -> impl Iterator<Item = &[Complex64]> {
        self.frames.chunks_exact(self.n_bins)
    }

    /// `|X(m, k)|^2` for frame `m`.
    pub fn power_frame(&self, m: usize) -> Vec<f64> {
        self.frame(m).iter().map(|c| c.norm_sqr()).collect()
    }

    /// Time-domain energy implied by the spectrum: two-sided `sum |X|^2 / N`.
    ///
    /// Equals `sum x^2` of the analysed signal when the squared window
    /// overlap-adds to one.
    pub fn parseval_energy(&self) -> f64 {
        let n = self.config.fft_size;
        let nyq = n / 2;
        let mut total = 0.0;
        for frame in self.iter_frames() {
            for (k, c) in frame.iter().enumerate() {
                let weight = if k == 0 || k == nyq { 1.0 } else { 2.0 };
                total += weight * c.norm_sqr();
            }
        }
        total / n as f64
    }

    /// Multiplies every bin by a real per-(frame, bin) gain.
    pub fn apply_gains(&mut self, gains: &crate::Matrix) -> Result<()> {
        if gains.shape() != (self.n_frames, self.n_bins) {
            return Err(Error::DimensionMismatch(format!(
                "gains {:?} vs spectrogram ({}, {})",
                gains.shape(),
                self.n_frames,
                self.n_bins
            )));
        }
        for (m, row) in gains.iter_rows().enumerate() {
            for (c, g) in self.frame_mut(m).iter_mut().zip(row) {
                *c *= *g;
            }
        }
        Ok(())
    }
}

/// Forward STFT of a 16 kHz signal.
pub fn stft(signal: &AudioSignal, config: &StftConfig) -> Result<Spectrogram> {
    config.validate()?;
    if signal.sample_rate() != SAMPLE_RATE {
        return Err(Error::WrongSampleRate(signal.sample_rate()));
    }
    if signal.is_empty() {
        return Err(Error::EmptySignal);
    }
    Ok(stft_samples(signal.samples(), config))
}

pub(crate) fn stft_samples(samples: &[f64], config: &StftConfig) -> Spectrogram {
    let n_frames = config.n_frames(samples.len());
    let n_bins = config.n_bins();
    let head = config.head_padding();
    let mut padded = vec![0.0; config.padded_len(samples.len())];
    padded[head..head + samples.len()].copy_from_slice(samples);

    let window = config.window.coefficients(config.window_length);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(config.fft_size);
    let mut buf = vec![Complex64::new(0.0, 0.0); config.fft_size];
    let mut frames = Vec::with_capacity(n_frames * n_bins);
    for m in 0..n_frames {
        let start = m * config.hop;
        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for (n, w) in window.iter().enumerate() {
            buf[n].re = w * padded[start + n];
        }
        fft.process(&mut buf);
        frames.extend_from_slice(&buf[..n_bins]);
    }
    Spectrogram {
        frames,
        n_frames,
        n_bins,
        config: *config,
        signal_len: samples.len(),
    }
}

/// Inverse STFT by weighted overlap-add, trimmed to the original length.
pub fn istft(spec: &Spectrogram) -> Result<AudioSignal> {
    let config = spec.config;
    config.validate()?;
    if spec.n_bins != config.n_bins()
        || spec.frames.len() != spec.n_frames * spec.n_bins
        || spec.n_frames != config.n_frames(spec.signal_len)
    {
        return Err(Error::MalformedSpectrogram(
            "frame layout disagrees with config".into(),
        ));
    }
    let n = config.fft_size;
    let window = config.window.coefficients(config.window_length);
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let padded_len = config.padded_len(spec.signal_len);
    let mut out = vec![0.0; padded_len];
    let mut norm = vec![0.0; padded_len];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];

    for (m, frame) in spec.iter_frames().enumerate() {
        buf[..spec.n_bins].copy_from_slice(frame);
        // Real signal: DC and Nyquist are real, upper half mirrors the lower.
        buf[0].im = 0.0;
        if n % 2 == 0 {
            buf[n / 2].im = 0.0;
        }
        for k in 1..n.div_ceil(2) {
            buf[n - k] = buf[k].conj();
        }
        ifft.process(&mut buf);
        let start = m * config.hop;
        for (i, w) in window.iter().enumerate() {
            out[start + i] += w * buf[i].re / n as f64;
            norm[start + i] += w * w;
        }
    }

    let head = config.head_padding();
    let samples = out[head..head + spec.signal_len]
        .iter()
        .zip(&norm[head..head + spec.signal_len])
        .map(|(y, d)| if *d > 1e-12 { y / d } else { 0.0 })
        .collect();
    AudioSignal::new(samples, SAMPLE_RATE)
}

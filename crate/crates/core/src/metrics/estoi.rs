//! Extended short-time objective intelligibility (ESTOI).
//!
//! Pipeline at the metric's native 10 kHz rate:
//!
//! 1. resample both signals 16 kHz -> 10 kHz;
//! 2. drop frames (256-sample Hann, hop 128) of the clean signal that are more
//!    than 40 dB below its loudest frame, dropping the same frames from the
//!    degraded signal, and overlap-add the survivors;
//! 3. STFT (same window, 512-point FFT) and 15 one-third-octave bands from
//!    150 Hz, band envelopes `sqrt(sum |X|^2)`;
//! 4. for every 30-frame (384 ms) segment, normalise each band's envelope to
//!    zero mean and unit norm over time, then each frame's band vector to zero
//!    mean and unit norm over frequency;
//! 5. score = mean over segments and frames of the clean/degraded inner
//!    product of the normalised frame vectors.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::resample::resample_16k_to_10k;
use crate::dsp::{AudioSignal, SAMPLE_RATE};
use crate::error::{Error, Result};

pub const ESTOI_RATE: usize = 10_000;
pub const FRAME_LEN: usize = 256;
pub const HOP: usize = 128;
pub const FFT_LEN: usize = 512;
pub const N_OCTAVE_BANDS: usize = 15;
pub const MIN_FREQ_HZ: f64 = 150.0;
pub const SEGMENT_FRAMES: usize = 30;
pub const DYN_RANGE_DB: f64 = 40.0;
const EPS: f64 = f64::EPSILON;

/// Hann window of length `n` without its zero end points.
pub(crate) fn analysis_window(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (n + 1) as f64).cos())
        .collect()
}

/// `N_OCTAVE_BANDS x (FFT_LEN/2 + 1)` 0/1 band-membership matrix.
pub(crate) fn third_octave_matrix() -> Vec<Vec<f64>> {
    let n_bins = FFT_LEN / 2 + 1;
    let freqs: Vec<f64> = (0..n_bins)
        .map(|k| k as f64 * ESTOI_RATE as f64 / FFT_LEN as f64)
        .collect();
    let nearest = |target: f64| {
        freqs
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
            .unwrap()
            .0
    };
    (0..N_OCTAVE_BANDS)
        .map(|b| {
            let k = b as f64;
            let lo = nearest(MIN_FREQ_HZ * 2f64.powf((2.0 * k - 1.0) / 6.0));
            let hi = nearest(MIN_FREQ_HZ * 2f64.powf((2.0 * k + 1.0) / 6.0));
            (0..n_bins).map(|i| if i >= lo && i < hi { 1.0 } else { 0.0 }).collect()
        })
        .collect()
}

fn frame_starts(len: usize) -> impl Iterator<Item = usize> {
    // Frames that fit strictly inside the signal, as in the reference
    // implementation: start < len - FRAME_LEN.
    (0..len.saturating_sub(FRAME_LEN)).step_by(HOP)
}

fn remove_silent_frames(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let w = analysis_window(FRAME_LEN);
    let starts: Vec<usize> = frame_starts(x.len()).collect();
    let energy_db = |s: usize| {
        let e: f64 = (0..FRAME_LEN).map(|i| (w[i] * x[s + i]).powi(2)).sum();
        20.0 * (e.sqrt() + EPS).log10()
    };
    let energies: Vec<f64> = starts.iter().map(|&s| energy_db(s)).collect();
    let max = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let kept: Vec<usize> = starts
        .iter()
        .zip(&energies)
        .filter(|(_, &e)| max - DYN_RANGE_DB - e < 0.0)
        .map(|(&s, _)| s)
        .collect();
    if kept.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let out_len = (kept.len() - 1) * HOP + FRAME_LEN;
    let mut xs = vec![0.0; out_len];
    let mut ys = vec![0.0; out_len];
    for (j, &s) in kept.iter().enumerate() {
        for i in 0..FRAME_LEN {
            xs[j * HOP + i] += w[i] * x[s + i];
            ys[j * HOP + i] += w[i] * y[s + i];
        }
    }
    (xs, ys)
}

/// One-third-octave band envelopes, `frames x bands`.
fn band_envelopes(x: &[f64], obm: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let w = analysis_window(FRAME_LEN);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(FFT_LEN);
    let mut buf = vec![Complex64::new(0.0, 0.0); FFT_LEN];
    frame_starts(x.len())
        .map(|s| {
            buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            for i in 0..FRAME_LEN {
                buf[i].re = w[i] * x[s + i];
            }
            fft.process(&mut buf);
            obm.iter()
                .map(|band| {
                    band.iter()
                        .zip(&buf)
                        .filter(|(g, _)| **g != 0.0)
                        .map(|(_, c)| c.norm_sqr())
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        })
        .collect()
}

fn normalize_segment(seg: &mut [Vec<f64>]) {
    let n_frames = seg.len();
    let n_bands = seg[0].len();
    for b in 0..n_bands {
        let mean = seg.iter().map(|f| f[b]).sum::<f64>() / n_frames as f64;
        seg.iter_mut().for_each(|f| f[b] -= mean);
        let norm = seg.iter().map(|f| f[b] * f[b]).sum::<f64>().sqrt();
        seg.iter_mut().for_each(|f| f[b] /= norm + EPS);
    }
    for f in seg.iter_mut() {
        let mean = f.iter().sum::<f64>() / n_bands as f64;
        f.iter_mut().for_each(|v| *v -= mean);
        let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
        f.iter_mut().for_each(|v| *v /= norm + EPS);
    }
}

/// ESTOI of `distorted` against `clean`; longer input is trimmed to the shorter.
pub fn estoi(clean: &AudioSignal, distorted: &AudioSignal) -> Result<f64> {
    for s in [clean, distorted] {
        if s.sample_rate() != SAMPLE_RATE {
            return Err(Error::WrongSampleRate(s.sample_rate()));
        }
    }
    let n = clean.len().min(distorted.len());
    estoi_samples(&clean.samples()[..n], &distorted.samples()[..n])
}

pub(crate) fn estoi_samples(clean: &[f64], distorted: &[f64]) -> Result<f64> {
    let x = resample_16k_to_10k(clean);
    let y = resample_16k_to_10k(distorted);
    let (x, y) = remove_silent_frames(&x, &y);
    let obm = third_octave_matrix();
    let xe = band_envelopes(&x, &obm);
    let ye = band_envelopes(&y, &obm);
    if xe.len() < SEGMENT_FRAMES {
        return Err(Error::TooShort(format!(
            "{} active frames, need {}",
            xe.len(),
            SEGMENT_FRAMES
        )));
    }
    let n_segments = xe.len() - SEGMENT_FRAMES + 1;
    let mut total = 0.0;
    for m in SEGMENT_FRAMES..=xe.len() {
        let mut xs = xe[m - SEGMENT_FRAMES..m].to_vec();
        let mut ys = ye[m - SEGMENT_FRAMES..m].to_vec();
        normalize_segment(&mut xs);
        normalize_segment(&mut ys);
        for (fx, fy) in xs.iter().zip(&ys) {
            total += fx.iter().zip(fy).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    Ok(total / (n_segments * SEGMENT_FRAMES) as f64)
}

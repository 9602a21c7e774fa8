//! ERB-rate triangular filterbank.
//!
//! Band centres are spaced uniformly on the Glasberg-Moore ERB-rate scale
//! from 0 Hz to Nyquist. Each band is a triangle in Hz with its apex at its
//! own centre and feet at the neighbouring centres; the first and last bands
//! are half-triangles clamped at 0 Hz and Nyquist. Adjacent triangles cross
//! linearly, so the amplitudes sum to exactly one in every bin.
//!
//! Below roughly 300 Hz the band spacing is narrower than a 31.25 Hz FFT bin,
//! so a few low bands have no bin inside their support and always carry zero
//! energy. That is harmless: their gains never reach a bin.

use std::fmt::Write as _;

use crate::dsp::Spectrogram;
use crate::error::{Error, Result};
use crate::gain::GainMatrix;
use crate::Matrix;

pub const N_BANDS: usize = 64;
pub const FEATURE_EXPONENT: f64 = 1.0 / 6.0;

/// Glasberg-Moore ERB-rate (ERB number) of frequency `hz`.
pub fn erb_rate(hz: f64) -> f64 {
    21.4 * (1.0 + 0.00437 * hz).log10()
}

/// Inverse of [`erb_rate`].
pub fn erb_rate_to_hz(rate: f64) -> f64 {
    (10f64.powf(rate / 21.4) - 1.0) / 0.00437
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErbFilterBank {
    centers: Vec<f64>,
    bin_freqs: Vec<f64>,
    // n_bands x n_bins
    weights: Matrix,
}

impl ErbFilterBank {
    pub fn new(n_bands: usize, n_bins: usize, sample_rate: u32) -> Result<Self> {
        if n_bands < 2 {
            return Err(Error::BadConfig(format!("need at least 2 bands, got {n_bands}")));
        }
        if n_bins < 2 {
            return Err(Error::BadConfig(format!("need at least 2 bins, got {n_bins}")));
        }
        let nyquist = sample_rate as f64 / 2.0;
        let top = erb_rate(nyquist);
        let mut centers: Vec<f64> = (0..n_bands)
            .map(|i| erb_rate_to_hz(top * i as f64 / (n_bands - 1) as f64))
            .collect();
        // Pin the ends exactly; the inverse map leaves ~1e-12 residue.
        centers[0] = 0.0;
        centers[n_bands - 1] = nyquist;

        let bin_freqs: Vec<f64> = (0..n_bins)
            .map(|k| k as f64 * nyquist / (n_bins - 1) as f64)
            .collect();
        let mut weights = Matrix::zeros(n_bands, n_bins);
        for (k, &f) in bin_freqs.iter().enumerate() {
            // Segment [c_i, c_{i+1}] containing f.
            let i = match centers.windows(2).position(|w| f <= w[1]) {
                Some(i) => i,
                None => n_bands - 2,
            };
            let (lo, hi) = (centers[i], centers[i + 1]);
            let t = ((f - lo) / (hi - lo)).clamp(0.0, 1.0);
            weights.set(i, k, 1.0 - t);
            weights.set(i + 1, k, t);
        }
        Ok(Self {
            centers,
            bin_freqs,
            weights,
        })
    }

    /// The engine's fixed bank: 64 bands over the 257 bins of a 512-point FFT at 16 kHz.
    pub fn standard() -> Self {
        Self::new(N_BANDS, 257, crate::dsp::SAMPLE_RATE).expect("static parameters")
    }

    pub fn n_bands(&self) -> usize {
        self.weights.rows()
    }

    pub fn n_bins(&self) -> usize {
        self.weights.cols()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn bin_frequencies(&self) -> &[f64] {
        &self.bin_freqs
    }

    /// Amplitudes `g_i(k)` of band `i`.
    pub fn band(&self, i: usize) -> &[f64] {
        self.weights.row(i)
    }

    pub fn weight(&self, i: usize, k: usize) -> f64 {
        self.weights.get(i, k)
    }

    /// Band energies `E(m, i) = sum_k g_i(k) P(m, k)` of a power matrix.
    pub fn analyze_power(&self, power: &Matrix) -> Result<ErbBands> {
        if power.cols() != self.n_bins() {
            return Err(Error::DimensionMismatch(format!(
                "{} bins vs filterbank {}",
                power.cols(),
                self.n_bins()
            )));
        }
        let mut out = Matrix::zeros(power.rows(), self.n_bands());
        for (m, p) in power.iter_rows().enumerate() {
            let row = out.row_mut(m);
            for (k, &pk) in p.iter().enumerate() {
                // At most two bands are non-zero per bin.
                for (i, e) in row.iter_mut().enumerate() {
                    let g = self.weights.get(i, k);
                    if g != 0.0 {
                        *e += g * pk;
                    }
                }
            }
        }
        Ok(ErbBands(out))
    }

    /// Debug dump: `band,center_hz,g_0,...,g_{K-1}` per line with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("band,center_hz");
        for k in 0..self.n_bins() {
            let _ = write!(s, ",g{k}");
        }
        s.push('\n');
        for (i, c) in self.centers.iter().enumerate() {
            let _ = write!(s, "{i},{c}");
            for g in self.band(i) {
                let _ = write!(s, ",{g}");
            }
            s.push('\n');
        }
        s
    }
}

/// Non-negative band energies, `frames x bands`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErbBands(Matrix);

impl ErbBands {
    pub fn new(energies: Matrix) -> Result<Self> {
        if energies.as_slice().iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(Error::BadConfig(
                "band energies must be finite and non-negative".into(),
            ));
        }
        Ok(Self(energies))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn frames(&self) -> usize {
        self.0.rows()
    }

    pub fn bands(&self) -> usize {
        self.0.cols()
    }

    pub fn total(&self) -> f64 {
        self.0.sum()
    }
}

pub fn build_filterbank(n_bands: usize, n_bins: usize, sample_rate: u32) -> Result<ErbFilterBank> {
    ErbFilterBank::new(n_bands, n_bins, sample_rate)
}

pub fn band_energies(spec: &Spectrogram, fb: &ErbFilterBank) -> Result<ErbBands> {
    if spec.n_bins() != fb.n_bins() {
        return Err(Error::DimensionMismatch(format!(
            "spectrogram has {} bins, filterbank {}",
            spec.n_bins(),
            fb.n_bins()
        )));
    }
    let mut power = Matrix::zeros(spec.n_frames(), spec.n_bins());
    for (m, frame) in spec.iter_frames().enumerate() {
        for (p, c) in power.row_mut(m).iter_mut().zip(frame) {
            *p = c.norm_sqr();
        }
    }
    fb.analyze_power(&power)
}

/// Per-bin gains `alpha_hat(m, k) = sqrt(sum_i g_i(k) alpha^2(m, i))`.
pub fn interpolate_gains(alpha: &GainMatrix, fb: &ErbFilterBank) -> Result<Matrix> {
    if alpha.bands() != fb.n_bands() {
        return Err(Error::DimensionMismatch(format!(
            "{} gain bands vs filterbank {}",
            alpha.bands(),
            fb.n_bands()
        )));
    }
    let a = alpha.matrix();
    let mut out = Matrix::zeros(a.rows(), fb.n_bins());
    for m in 0..a.rows() {
        let gains = a.row(m);
        let row = out.row_mut(m);
        for (k, v) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, g) in gains.iter().enumerate() {
                let w = fb.weight(i, k);
                if w != 0.0 {
                    acc += w * g * g;
                }
            }
            *v = acc.sqrt();
        }
    }
    Ok(out)
}

/// Element-wise power-law compression of band energies (network input only).
pub fn compress_features(bands: &ErbBands, exponent: f64) -> Matrix {
    bands.matrix().map(|e| e.max(0.0).powf(exponent))
}

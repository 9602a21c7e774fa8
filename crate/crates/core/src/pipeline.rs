//! End-to-end enhancement of one utterance:
//! STFT, ERB band energies, compressed features, generator, normalization,
//! per-bin gain interpolation, spectral multiplication and inverse STFT.

use crate::container::TensorFile;
use crate::dsp::{istft, noise_segment, stft, AudioSignal, StftConfig};
use crate::erb::{band_energies, compress_features, interpolate_gains, ErbBands, ErbFilterBank, FEATURE_EXPONENT};
use crate::error::{Error, Result};
use crate::gain::GainMatrix;
use crate::generator::{forward_utterance_with, ClnMode, GeneratorState, GeneratorWeights};
use crate::noise::{estimate_noise_psd, inject_estimation_error, NoisePsd};
use crate::normalize::{normalize, NormalizationMode};
use crate::Matrix;

/// Where the generator's noise features come from.
#[derive(Debug, Clone)]
pub enum NoiseSource {
    /// Noise recording; cut or cyclically tiled to the speech length, then tracked.
    Reference(AudioSignal),
    /// Precomputed PSD with one row per speech frame, or a single row used
    /// for every frame.
    Psd(NoisePsd),
    /// All-zero noise features.
    None,
}

#[derive(Debug, Clone, Copy)]
pub enum GainSource<'a> {
    /// Every gain is 1 and normalization is skipped: the DSP path alone.
    Identity,
    Generator(&'a GeneratorWeights),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnhanceOptions {
    pub mode: NormalizationMode,
    /// Percentage of noise PSD bins replaced by random values.
    pub error_rate: f64,
    pub seed: u64,
    pub cln_mode: ClnMode,
}

impl Default for EnhanceOptions {
    fn default() -> Self {
        Self {
            mode: NormalizationMode::UtteranceLevel,
            error_rate: 0.0,
            seed: 0,
            cln_mode: ClnMode::Cumulative,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Enhanced {
    pub signal: AudioSignal,
    pub raw_alpha: GainMatrix,
    pub alpha: GainMatrix,
    pub input_bands: ErbBands,
    /// `sum |Y|^2 / sum |X|^2` over all frames and bins of the modified and
    /// input spectrograms, before resynthesis.
    pub spectral_energy_ratio: f64,
}

/// Arch id of the gains dump written next to enhanced audio.
pub const GAINS_ARCH_ID: &str = "nele-gains-v1";

impl Enhanced {
    /// `NELW` container with tensors `raw_alpha` and `alpha`, both `[frames, bands]`.
    pub fn gains_to_bytes(&self) -> Vec<u8> {
        let f32s = |g: &GainMatrix| g.matrix().as_slice().iter().map(|&v| v as f32).collect::<Vec<f32>>();
        let (raw, alpha) = (f32s(&self.raw_alpha), f32s(&self.alpha));
        let shape = vec![self.alpha.frames(), self.alpha.bands()];
        TensorFile::pack(GAINS_ARCH_ID, [("raw_alpha", shape.clone(), &raw[..]), ("alpha", shape, &alpha[..])])
            .expect("shapes match")
            .to_bytes()
    }
}

/// Noise PSD aligned to `frames` speech frames.
pub fn noise_psd_for(source: &NoiseSource, speech_len: usize, frames: usize, config: &StftConfig) -> Result<Option<NoisePsd>> {
    match source {
        NoiseSource::None => Ok(None),
        NoiseSource::Reference(n) => {
            if n.is_empty() {
                return Err(Error::EmptySignal);
            }
            let fitted = AudioSignal::from_samples(noise_segment(n.samples(), speech_len, None));
            Ok(Some(estimate_noise_psd(&fitted, config)?))
        }
        NoiseSource::Psd(p) => {
            if p.bins() != config.n_bins() {
                return Err(Error::DimensionMismatch(format!("psd has {} bins, expected {}", p.bins(), config.n_bins())));
            }
            if p.frames() == frames {
                Ok(Some(p.clone()))
            } else if p.frames() == 1 {
                let mut m = Matrix::zeros(frames, p.bins());
                for r in 0..frames {
                    m.row_mut(r).copy_from_slice(p.matrix().row(0));
                }
                Ok(Some(NoisePsd::new(m)?))
            } else {
                Err(Error::DimensionMismatch(format!("psd has {} frames, speech {frames}", p.frames())))
            }
        }
    }
}

/// Compressed speech and noise features plus the speech band energies.
pub fn features(
    speech: &AudioSignal,
    noise: &NoiseSource,
    fb: &ErbFilterBank,
    config: &StftConfig,
    error_rate: f64,
    seed: u64,
) -> Result<(Matrix, Matrix, ErbBands)> {
    if !(0.0..=100.0).contains(&error_rate) {
        return Err(Error::BadErrorRate(error_rate));
    }
    let spec = stft(speech, config)?;
    let bands = band_energies(&spec, fb)?;
    let speech_feats = compress_features(&bands, FEATURE_EXPONENT);
    let noise_feats = match noise_psd_for(noise, speech.len(), spec.n_frames(), config)? {
        Some(psd) => {
            let psd = inject_estimation_error(&psd, error_rate, seed)?;
            compress_features(&fb.analyze_power(psd.matrix())?, FEATURE_EXPONENT)
        }
        None => Matrix::zeros(spec.n_frames(), fb.n_bands()),
    };
    Ok((speech_feats, noise_feats, bands))
}

pub fn enhance(speech: &AudioSignal, noise: &NoiseSource, gains: GainSource<'_>, opts: &EnhanceOptions) -> Result<Enhanced> {
    if speech.is_empty() {
        return Err(Error::EmptySignal);
    }
    let config = StftConfig::default();
    let fb = ErbFilterBank::standard();
    let mut spec = stft(speech, &config)?;
    let input_energy: f64 = spec.iter_frames().flatten().map(|c| c.norm_sqr()).sum();

    let (raw_alpha, alpha, input_bands) = match gains {
        GainSource::Identity => {
            if !(0.0..=100.0).contains(&opts.error_rate) {
                return Err(Error::BadErrorRate(opts.error_rate));
            }
            let bands = band_energies(&spec, &fb)?;
            let ones = GainMatrix::ones(spec.n_frames(), fb.n_bands());
            (ones.clone(), ones, bands)
        }
        GainSource::Generator(w) => {
            let (sf, nf, bands) = features(speech, noise, &fb, &config, opts.error_rate, opts.seed)?;
            let mut state = GeneratorState::new(w).with_cln_mode(opts.cln_mode);
            let raw = forward_utterance_with(w, &mut state, &sf, &nf)?;
            let alpha = normalize(&raw, &bands, opts.mode)?;
            (raw, alpha, bands)
        }
    };

    let bin_gains = interpolate_gains(&alpha, &fb)?;
    spec.apply_gains(&bin_gains)?;
    let output_energy: f64 = spec.iter_frames().flatten().map(|c| c.norm_sqr()).sum();
    let spectral_energy_ratio = if input_energy > 0.0 {
        output_energy / input_energy
    } else {
        1.0
    };
    Ok(Enhanced {
        signal: istft(&spec)?,
        raw_alpha,
        alpha,
        input_bands,
        spectral_energy_ratio,
    })
}

/// Raw gains and band energies of one utterance, the inputs of
/// [`crate::normalize::compute_soft_gamma`].
pub fn raw_gains(
    speech: &AudioSignal,
    noise: &NoiseSource,
    weights: &GeneratorWeights,
) -> Result<(GainMatrix, ErbBands)> {
    let config = StftConfig::default();
    let fb = ErbFilterBank::standard();
    let (sf, nf, bands) = features(speech, noise, &fb, &config, 0.0, 0)?;
    let mut state = GeneratorState::new(weights);
    Ok((forward_utterance_with(weights, &mut state, &sf, &nf)?, bands))
}

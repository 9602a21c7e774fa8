//! Energy normalization of raw generator gains.
//!
//! `gamma` multiplies amplitude gains, so it enters energies squared.
//! Utterance-level normalization needs the whole utterance and is not causal;
//! frame-level and soft normalization use only the current row.

use std::fmt;
use std::str::FromStr;

use crate::erb::ErbBands;
use crate::error::{Error, Result};
use crate::gain::GainMatrix;
use crate::Matrix;

/// Frames whose total band energy is below this pass through with unit gain.
pub const SILENT_FRAME_ENERGY: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormalizationMode {
    UtteranceLevel,
    FrameLevel,
    Soft(f64),
}

impl fmt::Display for NormalizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormalizationMode::UtteranceLevel => f.write_str("ul"),
            NormalizationMode::FrameLevel => f.write_str("fl"),
            NormalizationMode::Soft(g) => write!(f, "soft:{g}"),
        }
    }
}

/// Parses `ul`, `fl` or `soft:<gamma>`.
impl FromStr for NormalizationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ul" | "utterance" => Ok(NormalizationMode::UtteranceLevel),
            "fl" | "frame" => Ok(NormalizationMode::FrameLevel),
            other => {
                let g = other
                    .strip_prefix("soft:")
                    .ok_or_else(|| Error::BadConfig(format!("unknown normalization mode {s:?}")))?;
                let g: f64 = g
                    .parse()
                    .map_err(|_| Error::BadConfig(format!("bad soft gamma {g:?}")))?;
                check_gamma(g)?;
                Ok(NormalizationMode::Soft(g))
            }
        }
    }
}

fn check_gamma(g: f64) -> Result<()> {
    if g.is_finite() && g > 0.0 {
        Ok(())
    } else {
        Err(Error::BadGamma(g))
    }
}

fn check_dims(alpha: &GainMatrix, energies: &ErbBands) -> Result<()> {
    if alpha.matrix().shape() != energies.matrix().shape() {
        return Err(Error::DimensionMismatch(format!(
            "gains {:?} vs energies {:?}",
            alpha.matrix().shape(),
            energies.matrix().shape()
        )));
    }
    Ok(())
}

/// `(sum E, sum alpha^2 E)` over a row slice pair.
fn energy_pair(alpha: &[f64], e: &[f64]) -> (f64, f64) {
    alpha
        .iter()
        .zip(e)
        .fold((0.0, 0.0), |(a, b), (&g, &e)| (a + e, b + g * g * e))
}

/// `sum E / sum alpha^2 E` over the whole utterance.
pub fn utterance_energy_ratio(alpha: &GainMatrix, energies: &ErbBands) -> Result<f64> {
    check_dims(alpha, energies)?;
    let (e, ae) = energy_pair(alpha.matrix().as_slice(), energies.matrix().as_slice());
    if e <= 0.0 {
        return Err(Error::AllSilentUtterance);
    }
    Ok(e / ae)
}

/// Scales all gains by one `gamma` so the utterance keeps its total energy.
pub fn normalize_utterance(alpha: &GainMatrix, energies: &ErbBands) -> Result<GainMatrix> {
    let gamma = utterance_energy_ratio(alpha, energies)?.sqrt();
    Ok(GainMatrix::from_matrix_unchecked(alpha.matrix().map(|a| a * gamma)))
}

/// Scales each frame by its own `gamma` so every frame keeps its energy.
pub fn normalize_frame(alpha: &GainMatrix, energies: &ErbBands) -> Result<GainMatrix> {
    check_dims(alpha, energies)?;
    let mut out = Matrix::zeros(alpha.frames(), alpha.bands());
    for m in 0..alpha.frames() {
        let row = alpha.matrix().row(m);
        let (e, ae) = energy_pair(row, energies.matrix().row(m));
        let dst = out.row_mut(m);
        if e < SILENT_FRAME_ENERGY || ae <= 0.0 {
            dst.fill(1.0);
        } else {
            let gamma = (e / ae).sqrt();
            for (d, a) in dst.iter_mut().zip(row) {
                *d = a * gamma;
            }
        }
    }
    Ok(GainMatrix::from_matrix_unchecked(out))
}

/// Multiplies every gain by a fixed `gamma`; no energy constraint holds.
pub fn normalize_soft(alpha: &GainMatrix, gamma: f64) -> Result<GainMatrix> {
    check_gamma(gamma)?;
    GainMatrix::new(alpha.matrix().map(|a| a * gamma))
}

/// Applies `mode`; energies are ignored by [`NormalizationMode::Soft`].
pub fn normalize(alpha: &GainMatrix, energies: &ErbBands, mode: NormalizationMode) -> Result<GainMatrix> {
    match mode {
        NormalizationMode::UtteranceLevel => normalize_utterance(alpha, energies),
        NormalizationMode::FrameLevel => normalize_frame(alpha, energies),
        NormalizationMode::Soft(g) => {
            check_dims(alpha, energies)?;
            normalize_soft(alpha, g)
        }
    }
}

/// Static `gamma` for soft normalization: square root of the arithmetic mean,
/// over utterances, of `sum E / sum alpha^2 E`.
pub fn compute_soft_gamma<'a>(corpus: impl IntoIterator<Item = (&'a GainMatrix, &'a ErbBands)>) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (alpha, energies) in corpus {
        sum += utterance_energy_ratio(alpha, energies)?;
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok((sum / n as f64).sqrt())
}

use crate::dsp::AudioSignal;
use crate::error::{Error, Result};

pub const HIST_LO: f64 = 0.5;
pub const HIST_HI: f64 = 1.5;
pub const HIST_BINS: usize = 20;

/// Distribution of `RMS(enhanced) / RMS(unmodified)` over a set of pairs.
///
/// The histogram has 20 bins of width 0.05 covering `[0.5, 1.5)`; ratios
/// outside that range are counted in `below` / `above`.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsRatioStats {
    pub ratios: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub histogram: [usize; HIST_BINS],
    pub below: usize,
    pub above: usize,
}

impl RmsRatioStats {
    pub fn bin_edges(i: usize) -> (f64, f64) {
        let w = (HIST_HI - HIST_LO) / HIST_BINS as f64;
        (HIST_LO + i as f64 * w, HIST_LO + (i + 1) as f64 * w)
    }
}

pub fn rms_ratio_stats(pairs: &[(AudioSignal, AudioSignal)]) -> Result<RmsRatioStats> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let ratios = pairs
        .iter()
        .enumerate()
        .map(|(i, (enh, unmod))| {
            let r = unmod.rms();
            if r == 0.0 {
                Err(Error::SilentUnmodified(i))
            } else {
                Ok(enh.rms() / r)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / n;
    let std = (ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
    let mut histogram = [0usize; HIST_BINS];
    let (mut below, mut above) = (0, 0);
    let width = (HIST_HI - HIST_LO) / HIST_BINS as f64;
    for &r in &ratios {
        if r < HIST_LO {
            below += 1;
        } else if r >= HIST_HI {
            above += 1;
        } else {
            let i = (((r - HIST_LO) / width) as usize).min(HIST_BINS - 1);
            histogram[i] += 1;
        }
    }
    Ok(RmsRatioStats {
        ratios,
        mean,
        std,
        histogram,
        below,
        above,
    })
}

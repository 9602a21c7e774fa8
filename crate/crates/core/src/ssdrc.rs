//! ssdrc-lite: a simplified spectral shaping plus dynamic range compression
//! baseline. It ignores the noise entirely.
//!
//! Shaping is a zero-phase high-frequency shelf applied in the STFT domain:
//! `clamp(slope * log2(f / shelf_start_hz), 0, max_gain_db)` dB. Compression
//! follows a centred RMS envelope; levels above the threshold (by default the
//! median level of active samples) are reduced by `1 - 1/ratio`, and the gain
//! is smoothed with separate attack and release time constants.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::dsp::{istft, stft, AudioSignal, StftConfig, SAMPLE_RATE};
use crate::error::{Error, Result};

/// Samples more than this far below the loudest envelope value do not take
/// part in the median threshold.
const ACTIVE_RANGE_DB: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SsdrcConfig {
    pub shelf_start_hz: f64,
    pub slope_db_per_octave: f64,
    pub max_gain_db: f64,
    pub envelope_ms: f64,
    pub attack_ms: f64,
    pub release_ms: f64,
    pub ratio: f64,
    /// Absolute threshold in dB re full scale; `None` uses the median level.
    pub threshold_db: Option<f64>,
}

impl Default for SsdrcConfig {
    fn default() -> Self {
        Self {
            shelf_start_hz: 500.0,
            slope_db_per_octave: 12.0,
            max_gain_db: 12.0,
            envelope_ms: 10.0,
            attack_ms: 2.0,
            release_ms: 20.0,
            ratio: 2.0,
            threshold_db: None,
        }
    }
}

impl SsdrcConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("shelf_start_hz", self.shelf_start_hz),
            ("envelope_ms", self.envelope_ms),
            ("attack_ms", self.attack_ms),
            ("release_ms", self.release_ms),
        ];
        for (k, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::BadConfig(format!("{k} must be positive, got {v}")));
            }
        }
        for (k, v) in [("slope_db_per_octave", self.slope_db_per_octave), ("max_gain_db", self.max_gain_db)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::BadConfig(format!("{k} must be non-negative, got {v}")));
            }
        }
        // ratio >= 1 keeps the input/output level curve non-decreasing.
        if !(self.ratio.is_finite() && self.ratio >= 1.0) {
            return Err(Error::BadConfig(format!("ratio must be >= 1, got {}", self.ratio)));
        }
        if let Some(t) = self.threshold_db {
            if !t.is_finite() {
                return Err(Error::BadConfig("threshold_db must be finite".into()));
            }
        }
        Ok(())
    }

    /// Shelf gain in dB at `hz`.
    pub fn shaping_gain_db(&self, hz: f64) -> f64 {
        if hz <= 0.0 {
            return 0.0;
        }
        (self.slope_db_per_octave * (hz / self.shelf_start_hz).log2()).clamp(0.0, self.max_gain_db)
    }

    /// `key = value` lines, one per field, parseable by `FromStr`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "shelf_start_hz = {}", self.shelf_start_hz);
        let _ = writeln!(s, "slope_db_per_octave = {}", self.slope_db_per_octave);
        let _ = writeln!(s, "max_gain_db = {}", self.max_gain_db);
        let _ = writeln!(s, "envelope_ms = {}", self.envelope_ms);
        let _ = writeln!(s, "attack_ms = {}", self.attack_ms);
        let _ = writeln!(s, "release_ms = {}", self.release_ms);
        let _ = writeln!(s, "ratio = {}", self.ratio);
        match self.threshold_db {
            Some(t) => writeln!(s, "threshold_db = {t}"),
            None => writeln!(s, "threshold_db = median"),
        }
        .ok();
        s
    }
}

/// Reads `key = value` lines over the defaults; `#` starts a comment.
impl FromStr for SsdrcConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = SsdrcConfig::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::BadConfig(format!("line {}: expected key = value", no + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let num = || -> Result<f64> {
                value
                    .parse()
                    .map_err(|_| Error::BadConfig(format!("line {}: {key}: bad number {value:?}", no + 1)))
            };
            match key {
                "shelf_start_hz" => cfg.shelf_start_hz = num()?,
                "slope_db_per_octave" => cfg.slope_db_per_octave = num()?,
                "max_gain_db" => cfg.max_gain_db = num()?,
                "envelope_ms" => cfg.envelope_ms = num()?,
                "attack_ms" => cfg.attack_ms = num()?,
                "release_ms" => cfg.release_ms = num()?,
                "ratio" => cfg.ratio = num()?,
                "threshold_db" if value == "median" => cfg.threshold_db = None,
                "threshold_db" => cfg.threshold_db = Some(num()?),
                _ => return Err(Error::BadConfig(format!("line {}: unknown key {key:?}", no + 1))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn check_rate(x: &AudioSignal) -> Result<()> {
    if x.sample_rate() != SAMPLE_RATE {
        return Err(Error::WrongSampleRate(x.sample_rate()));
    }
    Ok(())
}

/// Zero-phase high-frequency shelf.
pub fn spectral_shaping(x: &AudioSignal, cfg: &SsdrcConfig) -> Result<AudioSignal> {
    check_rate(x)?;
    cfg.validate()?;
    if x.is_empty() {
        return Ok(x.clone());
    }
    let stft_cfg = StftConfig::default();
    let mut spec = stft(x, &stft_cfg)?;
    let gains: Vec<f64> = (0..spec.n_bins())
        .map(|k| 10f64.powf(cfg.shaping_gain_db(stft_cfg.bin_frequency(k)) / 20.0))
        .collect();
    for m in 0..spec.n_frames() {
        for (c, g) in spec.frame_mut(m).iter_mut().zip(&gains) {
            *c *= g;
        }
    }
    istft(&spec)
}

/// Centred sliding RMS over `len` samples; partial windows at the edges are
/// still divided by `len`.
pub fn rms_envelope(x: &[f64], len: usize) -> Vec<f64> {
    let len = len.max(1);
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v * v);
    }
    let half = len / 2;
    (0..x.len())
        .map(|n| {
            let lo = n.saturating_sub(half);
            let hi = (n + len - half).min(x.len());
            ((prefix[hi] - prefix[lo]).max(0.0) / len as f64).sqrt()
        })
        .collect()
}

fn level_db(env: f64) -> f64 {
    20.0 * env.log10()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn ms_to_samples(ms: f64) -> f64 {
    ms * 1e-3 * SAMPLE_RATE as f64
}

/// Compresses the 10 ms envelope above the threshold; no makeup gain.
pub fn dynamic_range_compression(x: &AudioSignal, cfg: &SsdrcConfig) -> Result<AudioSignal> {
    check_rate(x)?;
    cfg.validate()?;
    let env = rms_envelope(x.samples(), ms_to_samples(cfg.envelope_ms).round() as usize);
    let peak = env.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(x.clone());
    }
    let threshold = match cfg.threshold_db {
        Some(t) => t,
        None => {
            let floor = level_db(peak) - ACTIVE_RANGE_DB;
            median(env.iter().map(|&e| level_db(e)).filter(|&l| l > floor).collect())
        }
    };
    let slope = 1.0 - 1.0 / cfg.ratio;
    let attack = (-1.0 / ms_to_samples(cfg.attack_ms)).exp();
    let release = (-1.0 / ms_to_samples(cfg.release_ms)).exp();
    let mut gain_db = f64::NAN;
    let out = x
        .samples()
        .iter()
        .zip(&env)
        .map(|(&v, &e)| {
            let target = if e > 0.0 {
                -(level_db(e) - threshold).max(0.0) * slope
            } else {
                0.0
            };
            gain_db = if gain_db.is_nan() {
                target
            } else {
                let a = if target < gain_db { attack } else { release };
                a * gain_db + (1.0 - a) * target
            };
            v * 10f64.powf(gain_db / 20.0)
        })
        .collect();
    Ok(AudioSignal::from_samples(out))
}

/// Shaping, then compression, then rescaling to the input RMS.
pub fn ssdrc(x: &AudioSignal, cfg: &SsdrcConfig) -> Result<AudioSignal> {
    let shaped = spectral_shaping(x, cfg)?;
    let y = dynamic_range_compression(&shaped, cfg)?;
    let (rx, ry) = (x.rms(), y.rms());
    if rx == 0.0 || ry == 0.0 {
        return Ok(AudioSignal::zeros(x.len()));
    }
    Ok(y.scaled(rx / ry))
}

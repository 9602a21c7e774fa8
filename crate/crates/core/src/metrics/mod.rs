//! Objective evaluation: ESTOI, logistic score normalisation, LTAS gain and
//! RMS-ratio statistics.

mod align;
mod estoi;
mod ltas;
mod resample;
mod stats;

use std::fmt;
use std::str::FromStr;

use crate::dsp::AudioSignal;
use crate::error::{Error, Result};

pub use align::{align, estimate_lag, MAX_LAG_SECS};
pub use estoi::estoi;
pub use ltas::{ltas, ltas_gain};
pub use resample::resample_16k_to_10k;
pub use stats::{rms_ratio_stats, RmsRatioStats, HIST_BINS, HIST_HI, HIST_LO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricId {
    Estoi,
    Siib,
    Haspi,
    Pesq,
    Visqol,
}

impl MetricId {
    pub const ALL: [MetricId; 5] = [
        MetricId::Siib,
        MetricId::Haspi,
        MetricId::Estoi,
        MetricId::Pesq,
        MetricId::Visqol,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::Estoi => "ESTOI",
            MetricId::Siib => "SIIB",
            MetricId::Haspi => "HASPI",
            MetricId::Pesq => "PESQ",
            MetricId::Visqol => "ViSQOL",
        }
    }

    /// Logistic parameters that spread raw scores roughly uniformly over (0, 1).
    pub fn logistic(self) -> LogisticParams {
        let (a, b) = match self {
            MetricId::Siib => (-0.06, 32.0),
            MetricId::Haspi => (-0.95, 2.8),
            MetricId::Estoi => (-8.0, 0.25),
            MetricId::Pesq => (-1.5, 2.5),
            MetricId::Visqol => (-2.5, 2.2),
        };
        LogisticParams { a, b }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricId::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::BadConfig(format!("unknown metric '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticParams {
    pub a: f64,
    pub b: f64,
}

/// `f(v) = 1 / (1 + exp(a (v - b)))`.
///
/// Mathematically in (0, 1); in f64 it saturates to exactly 0 or 1 once
/// `|a (v - b)|` exceeds ~37 on the upper side or ~745 on the lower.
pub fn normalize_score(v: f64, params: LogisticParams) -> f64 {
    1.0 / (1.0 + (params.a * (v - params.b)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricScore {
    pub metric: MetricId,
    pub raw: f64,
    pub normalized: f64,
}

impl MetricScore {
    pub fn from_raw(metric: MetricId, raw: f64) -> Self {
        Self {
            metric,
            raw,
            normalized: normalize_score(raw, metric.logistic()),
        }
    }
}

/// ESTOI wrapped as a [`MetricScore`].
pub fn estoi_score(clean: &AudioSignal, distorted: &AudioSignal) -> Result<MetricScore> {
    Ok(MetricScore::from_raw(MetricId::Estoi, estoi(clean, distorted)?))
}

use crate::error::{Error, Result};
use crate::Matrix;

/// Lower bound of the generator's output activation, `e^-3`.
pub const RAW_GAIN_MIN: f64 = 0.049_787_068_367_863_944;
/// Upper bound of the generator's output activation, `e^3`.
pub const RAW_GAIN_MAX: f64 = 20.085_536_923_187_668;

/// Amplitude gains `alpha(m, i)` per frame and ERB band; every entry is
/// finite and strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix(Matrix);

impl GainMatrix {
    pub fn new(gains: Matrix) -> Result<Self> {
        for m in 0..gains.rows() {
            for (i, &g) in gains.row(m).iter().enumerate() {
                if !(g.is_finite() && g > 0.0) {
                    return Err(Error::NonPositiveGain {
                        frame: m,
                        band: i,
                        value: g,
                    });
                }
            }
        }
        Ok(Self(gains))
    }

    pub fn ones(frames: usize, bands: usize) -> Self {
        Self(Matrix::filled(frames, bands, 1.0))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn frames(&self) -> usize {
        self.0.rows()
    }

    pub fn bands(&self) -> usize {
        self.0.cols()
    }

    /// Caller guarantees every entry is finite and positive.
    pub(crate) fn from_matrix_unchecked(m: Matrix) -> Self {
        Self(m)
    }
}

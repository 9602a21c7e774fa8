use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("expected a 16000 Hz signal, got {0} Hz")]
    WrongSampleRate(u32),
    #[error("signal is empty")]
    EmptySignal,
    #[error("signal contains non-finite samples")]
    NonFiniteSample,
    #[error("malformed spectrogram: {0}")]
    MalformedSpectrogram(String),
    #[error("noise has zero energy and cannot be scaled to a target SNR")]
    SilentNoise,
    #[error("speech has zero energy")]
    SilentSpeech,
    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("gain at frame {frame}, band {band} is not positive ({value})")]
    NonPositiveGain { frame: usize, band: usize, value: f64 },
    #[error("signal too short: need at least {needed} samples, got {got}")]
    SignalTooShort { needed: usize, got: usize },
    #[error("error rate must lie in [0, 100], got {0}")]
    BadErrorRate(f64),
    #[error("bad container magic")]
    BadMagic,
    #[error("unsupported container version {0}")]
    BadVersion(u8),
    #[error("bad manifest: {0}")]
    BadManifest(String),
    #[error("tensor shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("tensor blob truncated: expected {expected} bytes, got {got}")]
    TruncatedBlob { expected: usize, got: usize },
    #[error("generator state does not match the weights' architecture")]
    StateArchMismatch,
    #[error("utterance has zero energy in every band")]
    AllSilentUtterance,
    #[error("gamma must be finite and positive, got {0}")]
    BadGamma(f64),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("signal too short for the metric: {0}")]
    TooShort(String),
    #[error("input is silent")]
    SilentInput,
    #[error("input list is empty")]
    EmptyInput,
    #[error("unmodified signal of pair {0} is silent")]
    SilentUnmodified(usize),
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("missing pair: {0}")]
    MissingPair(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable name of the variant, printed by the CLI on failure.
    pub fn name(&self) -> &'static str {
        match self {
            Error::WrongSampleRate(_) => "WrongSampleRate",
            Error::EmptySignal => "EmptySignal",
            Error::NonFiniteSample => "NonFiniteSample",
            Error::MalformedSpectrogram(_) => "MalformedSpectrogram",
            Error::SilentNoise => "SilentNoise",
            Error::SilentSpeech => "SilentSpeech",
            Error::UnsupportedFormat(_) => "UnsupportedFormat",
            Error::Io { .. } => "IoError",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NonPositiveGain { .. } => "NonPositiveGain",
            Error::SignalTooShort { .. } => "SignalTooShort",
            Error::BadErrorRate(_) => "BadErrorRate",
            Error::BadMagic => "BadMagic",
            Error::BadVersion(_) => "BadVersion",
            Error::BadManifest(_) => "BadManifest",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::TruncatedBlob { .. } => "TruncatedBlob",
            Error::StateArchMismatch => "StateArchMismatch",
            Error::AllSilentUtterance => "AllSilentUtterance",
            Error::BadGamma(_) => "BadGamma",
            Error::EmptyCorpus => "EmptyCorpus",
            Error::TooShort(_) => "TooShort",
            Error::SilentInput => "SilentInput",
            Error::EmptyInput => "EmptyInput",
            Error::SilentUnmodified(_) => "SilentUnmodified",
            Error::BadConfig(_) => "BadConfig",
            Error::MissingPair(_) => "MissingPair",
        }
    }
}

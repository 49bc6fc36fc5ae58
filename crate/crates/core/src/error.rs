use alloc::string::String;
use core::fmt;

use crate::imaging::BlurLevel;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Sample buffer does not match `width * height * channels`, or a
    /// dimension/channel count is out of range.
    InvalidImage(&'static str),
    /// The kernel does not fit inside the image.
    KernelTooLarge {
        kernel: (usize, usize),
        image: (usize, usize),
    },
    NegativeProbability { level: BlurLevel, value: f64 },
    ProbabilitySum(f64),
    DuplicateKey(String),
    UnknownImage(String),
    MissingReferences(String),
    DuplicatePrediction { image_id: String, level: BlurLevel },
    MissingPrediction { image_id: String, level: BlurLevel },
    MissingFlag(String),
    EmptyDataset,
    EmptyReferences,
    EmptyManifest,
    ZeroBinWidth,
    NoRecords(BlurLevel),
    IncompleteRow { technique: String, level: BlurLevel },
    DuplicateScore { technique: String, column: String },
    UnknownLevel(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidImage(why) => write!(f, "invalid image: {why}"),
            Error::KernelTooLarge { kernel, image } => write!(
                f,
                "kernel {}x{} does not fit image {}x{}",
                kernel.0, kernel.1, image.0, image.1
            ),
            Error::NegativeProbability { level, value } => {
                write!(f, "probability for {level} is {value}, must be in [0, 1]")
            }
            Error::ProbabilitySum(sum) => {
                write!(f, "probabilities sum to {sum}, expected 1")
            }
            Error::DuplicateKey(key) => write!(f, "duplicate sample key `{key}`"),
            Error::UnknownImage(id) => write!(f, "reference to unknown image `{id}`"),
            Error::MissingReferences(id) => {
                write!(f, "image `{id}` has no reference captions")
            }
            Error::DuplicatePrediction { image_id, level } => {
                write!(f, "duplicate prediction for image `{image_id}` at {level}")
            }
            Error::MissingPrediction { image_id, level } => {
                write!(f, "missing prediction for image `{image_id}` at {level}")
            }
            Error::MissingFlag(id) => write!(f, "image `{id}` has no blur flag"),
            Error::EmptyDataset => f.write_str("dataset is empty"),
            Error::EmptyReferences => f.write_str("reference list is empty"),
            Error::EmptyManifest => f.write_str("manifest has no entries for stage"),
            Error::ZeroBinWidth => f.write_str("histogram bin width must be at least 1"),
            Error::NoRecords(level) => write!(f, "no feature-count records at {level}"),
            Error::IncompleteRow { technique, level } => {
                write!(f, "technique `{technique}` has no score at {level}")
            }
            Error::DuplicateScore { technique, column } => {
                write!(f, "technique `{technique}` has two scores for {column}")
            }
            Error::UnknownLevel(token) => write!(f, "unknown blur level `{token}`"),
        }
    }
}

impl core::error::Error for Error {}

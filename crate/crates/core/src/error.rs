//! Error type shared by every module in the crate.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {detail}")]
    UnreadableFile { path: PathBuf, detail: String },

    #[error("unsupported raster format for {path}: {detail}")]
    UnsupportedFormat { path: PathBuf, detail: String },

    #[error("{path} cannot be converted to 8-bit grayscale: {detail}")]
    NotGrayConvertible { path: PathBuf, detail: String },

    #[error("sampling circle (center ({x},{y}), radius {radius}) exits the {width}x{height} image")]
    OutOfBounds {
        x: usize,
        y: usize,
        radius: f64,
        width: usize,
        height: usize,
    },

    #[error("kernel side {side} does not fit a {width}x{height} image")]
    KernelTooLarge {
        side: usize,
        width: usize,
        height: usize,
    },

    #[error("{width}x{height} image is too small for a descriptor needing margin {margin}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        margin: usize,
    },

    #[error("filter bank mixes kernel sides {first} and {other}")]
    MixedKernelSizes { first: usize, other: usize },

    #[error("invalid filter bank: {0}")]
    InvalidFilterBank(String),

    #[error("invalid descriptor parameters: {0}")]
    InvalidParams(String),

    #[error("code image is empty")]
    EmptyCodeImage,

    #[error("feature tag mismatch: `{left}` vs `{right}`")]
    TagMismatch { left: String, right: String },

    #[error("pairwise fusion needs at least 2 vectors, got {0}")]
    TooFewVectors(usize),

    #[error("combination rule produced the all-zero vector")]
    DegenerateZeroVector,

    #[error("template set is empty")]
    EmptyTemplateSet,

    #[error("gallery is empty")]
    EmptyGallery,

    #[error("score set has no genuine or no impostor scores")]
    EmptyScores,

    #[error("degenerate ROC: all scores share a single value")]
    DegenerateRoc,

    #[error("subject `{subject}` has {have} samples, protocol needs {need}")]
    InsufficientSamples {
        subject: String,
        have: usize,
        need: usize,
    },

    #[error("subject `{subject}` has no samples in session {session}")]
    MissingSession { subject: String, session: u32 },

    #[error("covariance is rank deficient: only {found} of {requested} usable components")]
    RankDeficient { requested: usize, found: usize },

    #[error("corpus contains no loadable images")]
    EmptyCorpus,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid manifest at line {line}: {detail}")]
    InvalidManifest { line: usize, detail: String },

    #[error("io failure: {0}")]
    Io(#[from] std::io::Error),
}

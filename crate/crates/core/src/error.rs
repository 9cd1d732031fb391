use thiserror::Error;

/// Errors produced by the correlation pipeline and its file formats.
#[derive(Debug, Error)]
pub enum ScvError {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("channel count mismatch: {left} vs {right}")]
    ChannelMismatch { left: usize, right: usize },

    #[error("grid size mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("k = {k} is out of range 1..={max}")]
    KOutOfRange { k: usize, max: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dense volume needs {elements} elements, budget is {budget}; use the sparse path")]
    BudgetExceeded { elements: u128, budget: usize },

    #[error("displacement ({dx}, {dy}) at pixel {pixel} is not integer valued")]
    NonIntegerDisplacement { pixel: usize, dx: f32, dy: f32 },

    #[error("displacement ({dx}, {dy}) at pixel {pixel} points outside the target grid")]
    DisplacementOutOfRange { pixel: usize, dx: f32, dy: f32 },

    #[error("level {level} is out of range 1..={levels}")]
    LevelOutOfRange { level: usize, levels: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no valid pixels to evaluate")]
    NoValidPixels,

    #[error("empty flow sequence")]
    EmptySequence,

    #[error("malformed {format} data: {reason}")]
    Format {
        format: &'static str,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, ScvError>;

pub(crate) fn format_err(format: &'static str, reason: impl Into<String>) -> ScvError {
    ScvError::Format {
        format,
        reason: reason.into(),
    }
}

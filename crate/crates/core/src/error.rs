//! Crate-wide error type.

/// Error raised by any fallible operation in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter or configuration key violates its domain or an invariant.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: String, reason: String },

    /// Two values that must live on the same grid do not.
    #[error("grid mismatch in {context}")]
    GridMismatch { context: &'static str },

    /// Spectral construction requested on a non-periodic grid.
    #[error("{context} requires a periodic grid")]
    PeriodicGridRequired { context: &'static str },

    /// A coordinate falls outside the grid range.
    #[error("value {value} outside grid range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    /// Both superposed moments snap to the same grid sample.
    #[error("superposition moments snap to the same grid index {index}")]
    DegenerateSuperposition { index: usize },

    /// Array dimensions do not match the grids that describe them.
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: &'static str },

    /// Intensity pattern carries no weight, so it cannot be sampled.
    #[error("intensity pattern is empty")]
    EmptyPattern,

    /// Analysis window does not contain enough structure to work with.
    #[error("analysis window too small: {reason}")]
    WindowTooSmall { reason: String },

    /// Pattern is identically zero over the analysis window.
    #[error("pattern is identically zero over the window")]
    FlatPattern,

    /// Histogram does not carry enough counts for the requested estimate.
    #[error("insufficient counts: {reason}")]
    InsufficientCounts { reason: String },

    /// Histogram holds no events at all.
    #[error("histogram has no events")]
    NoData,

    /// Syntax error in a configuration file.
    #[error("{origin}:{line}: {message}")]
    ConfigParse {
        origin: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parameter(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("negative value {value} at index {index}")]
    NegativeValue { index: usize, value: f64 },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("image is identically zero")]
    ZeroImage,

    #[error("unsupported size {width}x{height}: {reason}")]
    UnsupportedSize { width: usize, height: usize, reason: &'static str },

    #[error("solver diverged at iteration {iteration}: {what} is not finite")]
    Diverged { iteration: usize, what: &'static str },

    #[error("step search exhausted {halvings} reductions at iteration {iteration}")]
    LineSearchExhausted { iteration: usize, halvings: usize },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn mismatch(expected: impl core::fmt::Display, found: impl core::fmt::Display) -> Self {
        use alloc::string::ToString;
        Error::DimensionMismatch { expected: expected.to_string(), found: found.to_string() }
    }

    /// True for failures of the numerical iteration itself rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Diverged { .. } | Error::LineSearchExhausted { .. } | Error::NonFinite { .. })
    }
}

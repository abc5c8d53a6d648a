use alloc::string::String;

/// Errors raised by the core operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("no light found")]
    NoLightFound,
    #[error("degenerate exposure")]
    DegenerateExposure,
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("non-positive or non-finite depth {value} at ({x}, {y})")]
    InvalidDepth { x: usize, y: usize, value: f32 },
    #[error("underdetermined: {lit} lit pixels, need at least {required}")]
    Underdetermined { lit: usize, required: usize },
    #[error("invalid panorama: {0}")]
    InvalidPanorama(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("no valid normal could be estimated")]
    NoValidNormals,
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

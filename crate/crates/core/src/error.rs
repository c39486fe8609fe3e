use thiserror::Error;

/// Errors raised by kernel construction, posterior computation and
/// hyperparameter selection.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GpError {
    #[error("point {x} lies outside the kernel domain [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("invalid kernel construction: {0}")]
    Construction(String),

    #[error("derivative orders ({jx}, {jy}) exceed the kernel capability (max order {max})")]
    Capability { jx: u32, jy: u32, max: u32 },

    #[error("operation `{op}` requires a spectral kernel")]
    UnsupportedKernel { op: &'static str },

    #[error("numerical failure in {stage}: {detail}")]
    Numerical { stage: &'static str, detail: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("hyperparameter selection failed: {0}")]
    Selection(String),
}

pub type Result<T> = std::result::Result<T, GpError>;

impl GpError {
    pub(crate) fn numerical(stage: &'static str, detail: impl Into<String>) -> Self {
        GpError::Numerical {
            stage,
            detail: detail.into(),
        }
    }
}

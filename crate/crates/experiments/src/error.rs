use gpreg::GpError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid study configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Numerical(#[from] GpError),

    #[error("{method} at n={n}: {failures} of {reps} replicates failed (limit 5%)")]
    FailureRate {
        method: String,
        n: usize,
        failures: usize,
        reps: usize,
    },

    #[error("could not build worker pool: {0}")]
    Pool(String),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

//! Simulation studies for Gaussian-process regression and its derivatives:
//! replicated RMSE tables, oracle-tuned rate fits, contraction probes and
//! credible-band coverage. Every study is seeded and parallelism-invariant.

pub mod bands;
pub mod config;
pub mod contraction;
pub mod error;
pub mod rates;
pub mod seeding;
pub mod study;
pub mod target;

pub use bands::{band_study, BandConfig, BandResult};
pub use config::{LambdaGrid, Method, StudyConfig};
pub use contraction::{contraction_probe, contraction_trend, ContractionConfig, Norm};
pub use error::{ExperimentError, Result};
pub use rates::{rate_study, RateClass, RateConfig, RateResult};
pub use seeding::{replicate_rng, replicate_seed};
pub use study::{replicate_study, tune, tune_and_fit, StudyResult, Tuned};
pub use target::{rmse, simulate_dataset, true_target};

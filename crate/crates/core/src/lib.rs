//! Gaussian-process nonparametric regression with exact posteriors for a
//! regression function and its derivatives.
//!
//! All numerics are generic over [`Real`] (`f64` or `f32`); the aliases below
//! fix the scalar for the common cases.

pub mod basis;
pub mod error;
pub mod export;
pub mod kernel;
pub mod linalg;
pub mod posterior;
pub mod scalar;
pub mod selection;
pub mod spectral;

pub use basis::BasisId;
pub use error::{GpError, Result};
pub use kernel::{EigenSequence, Kernel, KernelFamily};
pub use posterior::{CredibleBand, Dataset, FittedGp, PosteriorSummary};
pub use scalar::Real;
pub use selection::{Criterion, ProfileLikelihood, ScoredCandidate, SelectionResult, SpectralProfile, TridiagonalProfile};
pub use spectral::{EffectiveDims, FunctionSpace, RateSchedule, SeriesFunction, SeriesSum};

pub type Kernel64 = Kernel<f64>;
pub type Dataset64 = Dataset<f64>;
pub type FittedGp64 = FittedGp<f64>;
pub type SeriesFunction64 = SeriesFunction<f64>;
pub type SelectionResult64 = SelectionResult<f64>;

pub type Kernel32 = Kernel<f32>;
pub type Dataset32 = Dataset<f32>;
pub type FittedGp32 = FittedGp<f32>;
pub type SeriesFunction32 = SeriesFunction<f32>;
pub type SelectionResult32 = SelectionResult<f32>;

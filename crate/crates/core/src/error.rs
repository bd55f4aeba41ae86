use std::io;

use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("expected a {expected} field, found {found}")]
    KindMismatch { expected: String, found: String },
    #[error("field has mass {mass:.3e} outside the support radius {radius}")]
    SupportViolation { radius: f64, mass: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("argument outside the supported region: {0}")]
    UnsupportedRegion(String),
    #[error("the spectral parameter must be nonzero")]
    ZeroParameter,
    #[error("|xi| = {magnitude} is below the cutoff {cutoff}")]
    BelowCutoff { magnitude: f64, cutoff: f64 },
    #[error("iteration left the ball of radius {rho} at step {step} (sup norm {norm})")]
    BallExit { step: usize, norm: f64, rho: f64 },
    #[error("contraction failed at step {step} (ratio {ratio:.3})")]
    ContractionFailure { step: usize, ratio: f64 },
    #[error("no convergence after {iterations} iterations (last increment {increment:.3e})")]
    NotConverged { iterations: usize, increment: f64 },
    #[error("potential model is not differentiable: {0}")]
    NotDifferentiable(String),
    #[error("invalid theorem constants: {0}")]
    InvalidConstants(String),
    #[error("frequency band too narrow: {0}")]
    BandTooNarrow(String),
    #[error("padded lattice of size {0} exceeds the configured limit")]
    TooLarge(usize),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Inverse scattering at fixed energy for two-dimensional Schrodinger
//! operators with nonlinear potentials.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`). The
//! aliases below fix the scalar to `f64`, with `f32` variants suffixed `F32`.

pub mod error;
pub mod born;
pub mod cgo;
pub mod dbar;
pub mod faddeev;
pub mod field;
pub mod forward;
pub mod potential;
pub mod scalar;
pub mod special;
pub mod transform;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Complex64 = num_complex::Complex<f64>;

pub type Grid = field::GridSpec<f64>;
pub type Field = field::ScalarField<f64>;
pub type Spectrum = field::SpectralField<f64>;
pub type Potential = potential::BuiltinPotential<f64>;
pub type Model = potential::PotentialModel<f64>;
pub type Cgo = cgo::CgoSolver<f64>;
pub type Helmholtz = forward::HelmholtzSolver<f64>;

pub type GridF32 = field::GridSpec<f32>;
pub type FieldF32 = field::ScalarField<f32>;
pub type SpectrumF32 = field::SpectralField<f32>;
pub type PotentialF32 = potential::BuiltinPotential<f32>;
pub type ModelF32 = potential::PotentialModel<f32>;
pub type CgoF32 = cgo::CgoSolver<f32>;
pub type HelmholtzF32 = forward::HelmholtzSolver<f32>;

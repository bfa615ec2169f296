//! Pseudospectral simulator for Hartree-type nonlinear Schrödinger equations
//! with an external potential, and the measurement tools used to check decay
//! estimates along its trajectories.
//!
//! Numerical modules are generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`, which is what every tolerance in
//! the test suites assumes.

pub mod bootstrap;
pub mod corpus;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod physics;
pub mod propagator;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Grid = grid::GridSpec<f64>;
pub type Field = grid::ComplexField<f64>;
pub type Spectrum = grid::SpectralField<f64>;

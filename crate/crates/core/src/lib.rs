//! Pseudospectral solver for the fractional Navier-Stokes equations
//!
//! ```text
//! ∂ₜu + ((φ_ε * u)·∇)u + ∇p = −(−Δ)^α u,   div u = 0
//! ```
//!
//! on the periodic box `[0, 2π)³`, together with calculators for the
//! stability constants, difference bounds and singular-time estimates that
//! govern how solutions depend on the initial datum and the order `α`, and a
//! harness that checks those bounds against simulated trajectories.

pub mod dynamics;
pub mod error;
pub mod estimates;
pub mod exec;
pub mod fft;
pub mod field;
pub mod grid;
pub mod harness;
pub mod snapshot;
pub mod spectral;
pub mod suites;

pub use error::{DynamicsError, EstimateError, HarnessError, SnapshotError, SpectralError};
pub use exec::Execution;
pub use fft::Fft3;
pub use field::SpectralField;
pub use grid::GridSpec;
pub use spectral::NormConvention;

//! Pseudo-spectral simulator for the forced subcritical surface
//! quasi-geostrophic equation on the 2-torus, plus a verification harness
//! for the a-priori estimates that govern its long-time dynamics: decay
//! inequalities, energy balance, nonlinear lower bounds on the fractional
//! Laplacian, absorbing-set radii, Hölder-modulus evolution, and the
//! convergence of subcritical trajectories to the critical ones.
//!
//! The crate is organised around a mean-free [`field::SpectralField`] on a
//! square 2π-periodic grid. Fractional operators act as Fourier multipliers
//! in [`operators`]; an independent real-space singular-integral route to the
//! same operators lives in [`quadrature`] and serves as the oracle for the
//! spectral path. [`solver`] advances the equation with an integrating-factor
//! RK4 scheme that treats the diffusion exactly, [`estimates`] instruments
//! trajectories and checks every bound, and [`convergence`] measures the
//! γ → 1⁺ trajectory convergence rate.

pub mod checkpoint;
pub mod convergence;
pub mod error;
pub mod estimates;
pub mod field;
mod fft;
pub mod grid;
pub mod operators;
pub mod quadrature;
pub mod solver;

pub use error::SqgError;
pub use field::{SpectralField, SpectrumRecipe, VelocityField};
pub use grid::TorusGrid;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, SqgError>;

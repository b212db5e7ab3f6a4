//! Linearized quantum-noise model of a driven optomechanical cavity with
//! both linear (g₁·x) and quadratic (g₂·x²) dispersive coupling.
//!
//! The pipeline runs [`params::derive`] → [`steady::steady_states`] →
//! [`stability::routh_hurwitz`] → [`spectra`]. The [`oracle`] module
//! integrates the same linear dynamics stochastically as an independent
//! check of the analytic spectra, and [`sweep`] drives parameter grids and
//! figure reproduction.

pub mod error;
pub mod params;
pub mod poly;
pub mod steady;

pub use error::{Error, Result};
pub mod spectra;
pub mod stability;
pub mod oracle;
pub mod sweep;

//! Spectral operators, time integrators and error analysis for the improved
//! Boussinesq equation and its uncoupled unidirectional approximations.
//!
//! Everything lives on a periodic grid over `[-L, L)`. Fields are real
//! samples; spectral work goes through [`spectral::PeriodicGrid`].

pub mod analysis;
pub mod error;
pub mod params;
pub mod solvers;
pub mod spectral;

pub use error::{Error, Result};
pub use params::PhysParams;
pub use spectral::{Field, PeriodicGrid};

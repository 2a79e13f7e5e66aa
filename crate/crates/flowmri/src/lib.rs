//! Reconstruction engine for sparse phase-contrast MRI velocimetry.
//!
//! The pipeline jointly reconstructs velocity fields, segments the flow
//! geometry, and infers pressure and wall shear rate from sparse, noisy
//! k-space signals by solving an inverse Navier-Stokes boundary value
//! problem on self-generated digital phantoms.

pub mod covariance;
pub mod error;
pub mod fields;
pub mod flow;
pub mod kspace;
pub mod linalg;

pub use error::{Error, Result};

//! Forward and inverse scattering for the Zakharov–Shabat system
//!
//! ```text
//! w_x = [[-ik, q(x)], [r(x), ik]] w
//! ```
//!
//! with meromorphic potentials `q`, `r` that decay at both ends of the real line.
//! Jost solutions are integrated along a complex contour that lifts off the
//! real axis to avoid poles; scattering coefficients come from Wronskian
//! determinants; the discrete spectrum is located by the argument principle;
//! reflectionless potentials are rebuilt from discrete data by an exact
//! residue construction.

pub mod analytic;
pub mod cli;
pub mod contour;
pub mod cser;
pub mod error;
pub mod ode;
pub mod poly;
pub mod potentials;
pub mod reconstruct;
pub mod scattering;
pub mod spectrum;

pub use error::{Error, Result};
pub use num_complex::Complex64;

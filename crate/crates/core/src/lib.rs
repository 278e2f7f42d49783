//! Simulation and verification harness for one-dimensional Riesz gases.

pub mod dynamics;
pub mod brownian;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod integrator;
pub mod laws;
pub mod measures;
pub mod numeric;

pub use error::{Error, Result};

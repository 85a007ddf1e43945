//! Detection statistics of a Mach–Zehnder interferometer whose mirror is a
//! damped quantum harmonic oscillator driven by radiation pressure.

pub mod cli;
pub mod counting;
pub mod error;
pub mod kernels;
pub mod model;
pub mod oracles;
pub mod oscillator;
pub mod quadrature;
pub mod rng;
pub mod spectra_approx;
pub mod spectra_exact;
pub mod weyl_circuit;

pub use error::{Error, Result};

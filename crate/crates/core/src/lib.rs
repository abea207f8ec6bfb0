//! Frequency-domain simulator for single-photon routing in a driven,
//! parametrically modulated cavity optomechanical system.
//!
//! The pipeline follows the linearized Gaussian treatment: classical
//! steady state of the pumped cavity, drift matrices for the fluctuation
//! dynamics (with and without the mechanical modulation tone), frequency
//! domain transfer coefficients from the quantum Langevin equations, and
//! output spectra split into signal, thermal, and vacuum components for
//! both cavity ports. The [`router`] module turns spectra into routing
//! verdicts; [`cli`] wires everything to a configuration file and CSV/JSON
//! outputs.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod router;
pub mod spectra;
pub mod steadystate;

mod ode;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

//! Physical parameters and derived constants.
//!
//! All frequencies and rates are SI angular frequencies (rad/s). The
//! quoted mechanical linewidth of 0.76 Hz is an energy-decay linewidth;
//! the amplitude damping rate entering the Langevin equations is half of
//! it, `gamma_m = pi * 0.76 rad/s`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Raw physical parameters as they would be quoted for an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    /// Optical wavelength lambda (m).
    pub wavelength: f64,
    /// Cavity length L (m).
    pub cavity_length: f64,
    /// Mirror (mechanical resonator) mass m (kg).
    pub mirror_mass: f64,
    /// Mechanical resonance frequency omega_m (rad/s).
    pub omega_m: f64,
    /// Mechanical amplitude damping rate gamma (rad/s).
    pub gamma_m: f64,
    /// Cavity half-damping kappa (rad/s); each port couples at rate kappa,
    /// total cavity damping 2*kappa.
    pub kappa: f64,
    /// Pump-cavity detuning Delta = omega_c - omega_p (rad/s).
    pub delta: f64,
    /// Thermal phonon occupation of the mechanical bath (dimensionless).
    pub n_th: f64,
    /// Linewidth Gamma of the incident single-photon wavepacket (rad/s).
    pub gamma_photon: f64,
}

impl RawParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("wavelength_lambda", self.wavelength),
            ("cavity_length_L", self.cavity_length),
            ("mirror_mass_m", self.mirror_mass),
            ("omega_m", self.omega_m),
            ("gamma_m", self.gamma_m),
            ("kappa", self.kappa),
            ("Delta", self.delta),
            ("Gamma_photon", self.gamma_photon),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be strictly positive, got {value}"
                )));
            }
        }
        if !(self.n_th >= 0.0) || !self.n_th.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "n_th must be >= 0, got {}",
                self.n_th
            )));
        }
        if self.kappa >= self.omega_m {
            return Err(Error::InvalidParameter(format!(
                "resolved-sideband regime requires kappa < omega_m (kappa = {}, omega_m = {})",
                self.kappa, self.omega_m
            )));
        }
        Ok(())
    }
}

/// Raw parameters plus the constants derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub raw: RawParams,
    /// Cavity resonance frequency omega_c = 2*pi*c/lambda (rad/s).
    pub omega_c: f64,
    /// Mechanical zero-point amplitude sqrt(hbar / (2 m omega_m)) (m).
    pub x_zpf: f64,
    /// Single-photon optomechanical coupling (omega_c / L) * x_zpf (rad/s).
    pub g0: f64,
}

impl std::ops::Deref for ModelParams {
    type Target = RawParams;
    fn deref(&self) -> &RawParams {
        &self.raw
    }
}

/// Drive and modulation parameters.
///
/// `epsilon_d = 0` selects case I (no mechanical modulation);
/// `epsilon_d > 0` requires `omega_d > 0` and selects case II.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    /// Effective optomechanical coupling G = g0 * |alpha| (rad/s), taken
    /// real by phase convention.
    pub coupling: f64,
    /// Amplitude of the mechanical modulation tone (rad/s).
    pub epsilon_d: f64,
    /// Frequency of the mechanical modulation tone (rad/s); the spring
    /// constant is modulated at 2*omega_d.
    pub omega_d: f64,
}

impl DriveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.coupling >= 0.0) || !self.coupling.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "G must be >= 0, got {}",
                self.coupling
            )));
        }
        if !(self.epsilon_d >= 0.0) || !self.epsilon_d.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "epsilon_d must be >= 0, got {}",
                self.epsilon_d
            )));
        }
        if self.epsilon_d > 0.0 && !(self.omega_d > 0.0) {
            return Err(Error::InvalidParameter(
                "epsilon_d > 0 requires omega_d > 0".into(),
            ));
        }
        if self.omega_d < 0.0 || !self.omega_d.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "omega_d must be >= 0, got {}",
                self.omega_d
            )));
        }
        Ok(())
    }

    /// True when the modulation tone is present (case II).
    pub fn is_modulated(&self) -> bool {
        self.epsilon_d > 0.0
    }
}

/// Fill in the derived constants for a validated raw parameter set.
pub fn derive_constants(raw: RawParams) -> Result<ModelParams> {
    raw.validate()?;
    let omega_c = 2.0 * PI * SPEED_OF_LIGHT / raw.wavelength;
    let x_zpf = (HBAR / (2.0 * raw.mirror_mass * raw.omega_m)).sqrt();
    let g0 = omega_c / raw.cavity_length * x_zpf;
    Ok(ModelParams {
        raw,
        omega_c,
        x_zpf,
        g0,
    })
}

/// The parameter set used throughout the reference figures:
/// lambda = 1054 nm, L = 6.7 cm, m = 40 ng, omega_m = 2*pi*134 kHz,
/// gamma_m = 0.76 Hz linewidth, kappa = 0.1*omega_m, Delta = omega_m.
///
/// The photon linewidth defaults to the case-I operating value
/// Gamma = omega_m; n_th defaults to 1. The drive defaults to case I
/// with G = 0.2*omega_m.
pub fn paper_preset() -> (RawParams, DriveParams) {
    let omega_m = 2.0 * PI * 134e3;
    let raw = RawParams {
        wavelength: 1054e-9,
        cavity_length: 6.7e-2,
        mirror_mass: 40e-12,
        omega_m,
        gamma_m: PI * 0.76,
        kappa: 0.1 * omega_m,
        delta: omega_m,
        n_th: 1.0,
        gamma_photon: omega_m,
    };
    let drive = DriveParams {
        coupling: 0.2 * omega_m,
        epsilon_d: 0.0,
        omega_d: 0.0,
    };
    (raw, drive)
}

/// Case-II drive for the reference figures: G = 0.2*omega_m,
/// epsilon_d = 2.37e-4 * kappa, at the given modulation frequency.
pub fn paper_drive_case2(raw: &RawParams, omega_d: f64) -> DriveParams {
    DriveParams {
        coupling: 0.2 * raw.omega_m,
        epsilon_d: 2.37e-4 * raw.kappa,
        omega_d,
    }
}

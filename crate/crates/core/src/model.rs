//! Input parameters of the interferometer and the closed-form constants that
//! depend only on the mechanical oscillator.
//!
//! The library is unit-agnostic. Defaults and docs take the bare mechanical
//! frequency as the frequency unit, `omega_bare = 1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::NoiseSpectrum;

/// Mechanical oscillator: bare frequency, damping rate and the dimensionless
/// radiation-pressure kick `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanicalParams {
    pub omega_bare: f64,
    pub gamma: f64,
    pub v: f64,
}

impl MechanicalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_bare > 0.0) || !self.omega_bare.is_finite() {
            return Err(Error::Regime(format!(
                "bare frequency must be positive, got {}",
                self.omega_bare
            )));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::Regime(format!(
                "damping rate must be positive, got {}",
                self.gamma
            )));
        }
        if !self.v.is_finite() {
            return Err(Error::Regime("kick parameter v must be finite".into()));
        }
        if self.omega_bare * self.omega_bare <= self.gamma * self.gamma / 4.0 {
            return Err(Error::Regime(format!(
                "oscillator is not underdamped: omega_bare^2 = {} <= gamma^2/4 = {}",
                self.omega_bare * self.omega_bare,
                self.gamma * self.gamma / 4.0
            )));
        }
        Ok(())
    }
}

/// Laser and interferometer settings. Only the photon flux `|lambda|^2` of the
/// input laser enters the statistics; its phase is absorbed into `psi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticalParams {
    pub lambda_sq: f64,
    /// Transmittance of the first beam splitter.
    pub eta: f64,
    /// Tunable phase of the reference arm.
    pub psi: f64,
    /// Reflection phase of the oscillating mirror.
    pub phi: f64,
}

impl OpticalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_sq >= 0.0) || !self.lambda_sq.is_finite() {
            return Err(Error::Config(format!(
                "lambda_sq must be a finite non-negative flux, got {}",
                self.lambda_sq
            )));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::Config(format!(
                "transmittance eta must lie in (0,1), got {}",
                self.eta
            )));
        }
        if !self.psi.is_finite() || !self.phi.is_finite() {
            return Err(Error::Config("phases must be finite".into()));
        }
        Ok(())
    }
}

/// Photodetector with exponential response `c * kappa * exp(-kappa t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorParams {
    pub c_gain: f64,
    pub kappa: f64,
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_gain > 0.0 && self.kappa > 0.0) {
            return Err(Error::Config(format!(
                "detector gain and bandwidth must be positive, got c = {}, kappa = {}",
                self.c_gain, self.kappa
            )));
        }
        Ok(())
    }

    /// `c^2 kappa^2 / (mu^2 + kappa^2)`, the squared modulus of the response's
    /// Fourier transform.
    pub fn filter(&self, mu: f64) -> f64 {
        let k2 = self.kappa * self.kappa;
        self.c_gain * self.c_gain * k2 / (mu * mu + k2)
    }
}

/// Damped frequency and the phase factor `tau` relating the mechanical mode
/// operator to position and momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedMechanical {
    pub omega_bare: f64,
    pub gamma: f64,
    pub v: f64,
    pub omega_damped: f64,
    pub tau: Complex64,
}

impl DerivedMechanical {
    /// `v^2 Omega / (2 omega)`, the common prefactor of `h`, `g` and `K`.
    pub fn kick_scale(&self) -> f64 {
        self.v * self.v * self.omega_bare / (2.0 * self.omega_damped)
    }
}

pub fn derive_mechanical(p: &MechanicalParams) -> Result<DerivedMechanical> {
    p.validate()?;
    let omega_damped = (p.omega_bare * p.omega_bare - p.gamma * p.gamma / 4.0).sqrt();
    let tau = Complex64::new(omega_damped / p.omega_bare, -0.5 * p.gamma / p.omega_bare);
    Ok(DerivedMechanical {
        omega_bare: p.omega_bare,
        gamma: p.gamma,
        v: p.v,
        omega_damped,
        tau,
    })
}

/// Interference visibility `2 sqrt(eta (1 - eta))` of the two arms.
pub fn chi(opt: &OpticalParams) -> f64 {
    2.0 * (opt.eta * (1.0 - opt.eta)).max(0.0).sqrt()
}

/// How the kernel `g` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GMode {
    /// Full line integral over the bath spectrum.
    #[default]
    Quadrature,
    /// Bath spectrum treated as flat around the damped frequency.
    Flat,
}

/// Every physical input of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub mechanical: MechanicalParams,
    pub optical: OpticalParams,
    pub detector: DetectorParams,
    pub noise: NoiseSpectrum,
    #[serde(default)]
    pub g_mode: GMode,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::reference()
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        self.mechanical.validate()?;
        self.optical.validate()?;
        self.detector.validate()?;
        self.noise.validate()
    }

    /// The weak-coupling reference point used throughout the docs: vacuum
    /// bath, `gamma/omega = 1/5`, `eta |lambda|^2 v^2 / Omega = 1` with
    /// `eta = 0.1`, `v^2 = 0.01`, `|lambda|^2 = 1000`.
    pub fn reference() -> Self {
        // gamma / omega_damped = 1/5 with omega_bare = 1.
        let gamma = 2.0 / 101f64.sqrt();
        ModelConfig {
            mechanical: MechanicalParams {
                omega_bare: 1.0,
                gamma,
                v: 0.1,
            },
            optical: OpticalParams {
                lambda_sq: 1000.0,
                eta: 0.1,
                psi: 0.0,
                phi: 0.0,
            },
            detector: DetectorParams {
                c_gain: 1.0,
                kappa: 5.0,
            },
            noise: NoiseSpectrum::Vacuum,
            g_mode: GMode::Quadrature,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pythagorean_triple_example() {
        let d = derive_mechanical(&MechanicalParams {
            omega_bare: 5.0,
            gamma: 8.0,
            v: 0.1,
        })
        .unwrap();
        assert!((d.omega_damped - 3.0).abs() < 1e-15);
        assert!((d.tau - Complex64::new(0.6, -0.8)).norm() < 1e-15);
    }

    #[test]
    fn overdamped_is_rejected() {
        let r = derive_mechanical(&MechanicalParams {
            omega_bare: 1.0,
            gamma: 3.0,
            v: 0.0,
        });
        assert!(matches!(r, Err(Error::Regime(_))));
        // critical damping is rejected as well
        let r = derive_mechanical(&MechanicalParams {
            omega_bare: 1.0,
            gamma: 2.0,
            v: 0.0,
        });
        assert!(matches!(r, Err(Error::Regime(_))));
    }

    #[test]
    fn reference_damped_frequency() {
        let d = derive_mechanical(&MechanicalParams {
            omega_bare: 1.0,
            gamma: 0.199007,
            v: 0.1,
        })
        .unwrap();
        assert!((d.omega_damped - 0.995037).abs() < 1e-6);
        let r = ModelConfig::reference();
        let d = derive_mechanical(&r.mechanical).unwrap();
        assert!((r.mechanical.gamma / d.omega_damped - 0.2).abs() < 1e-15);
    }

    #[test]
    fn chi_values() {
        let mk = |eta| OpticalParams {
            lambda_sq: 1.0,
            eta,
            psi: 0.0,
            phi: 0.0,
        };
        assert_eq!(chi(&mk(0.5)), 1.0);
        assert!((chi(&mk(0.1)) - 0.6).abs() < 1e-15);
        assert!(chi(&mk(1e-12)) < 3e-6);
        assert_eq!(chi(&mk(0.0)), 0.0);
    }

    #[test]
    fn optical_validation() {
        let mut o = ModelConfig::reference().optical;
        o.eta = 1.0;
        assert!(o.validate().is_err());
        o.eta = 0.3;
        o.lambda_sq = -1.0;
        assert!(o.validate().is_err());
    }

    proptest! {
        #[test]
        fn tau_has_unit_modulus(omega in 0.01f64..100.0, frac in 0.0f64..0.999) {
            let gamma = 2.0 * omega * frac;
            prop_assume!(gamma > 0.0);
            let d = derive_mechanical(&MechanicalParams { omega_bare: omega, gamma, v: 0.3 }).unwrap();
            prop_assert!((d.tau.norm_sqr() - 1.0).abs() < 1e-14);
            prop_assert!(d.omega_damped > 0.0 && d.omega_damped < omega);
        }

        #[test]
        fn chi_is_symmetric(eta in 0.0f64..1.0) {
            let a = OpticalParams { lambda_sq: 1.0, eta, psi: 0.0, phi: 0.0 };
            let b = OpticalParams { eta: 1.0 - eta, ..a };
            // 1 - (1 - eta) is only eta up to rounding
            let tol = 4.0 * f64::EPSILON / (eta * (1.0 - eta)).sqrt().max(1e-300);
            prop_assert!((chi(&a) - chi(&b)).abs() <= tol);
            prop_assert!((0.0..=1.0).contains(&chi(&a)));
        }
    }
}

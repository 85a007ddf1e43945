//! First-order closed forms of the reduced spectra, valid for weak
//! radiation-pressure coupling and a strong laser, plus the diagnostics that
//! tell how far a configuration is from that regime.
//!
//! The phase `ψ₀` reported here is the minimiser of the approximate `Σ₋(0)`.
//! At finite coupling it can differ from the exact one returned by
//! [`SpectraEngine::z_and_extremes`](crate::spectra_exact::SpectraEngine::z_and_extremes),
//! which is authoritative.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{derive_mechanical, ModelConfig};
use crate::spectra_exact::{check_grid, Method, SpectralCurve};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Thresholds for the `≪ 1` and `≫ 1` regime tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegimeThresholds {
    pub small: f64,
    pub large: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        RegimeThresholds {
            small: 0.05,
            large: 20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    /// `(N_eff + ½) v²Ω/(2ω)`.
    pub weak_cond1: f64,
    /// `(η|λ|²v⁴Ω/(4γω))² / (v²Ω/2ω)`.
    pub weak_cond2: f64,
    /// `(η|λ|²v²/Ω) / ((γ/ω)(N(ω) + ½))`.
    pub strong_cond1: f64,
    /// `E(0)²`.
    pub strong_cond2: f64,
    pub weak1_ok: bool,
    pub weak2_ok: bool,
    pub strong1_ok: bool,
    pub strong2_ok: bool,
    pub thresholds: RegimeThresholds,
}

/// Parameters of the approximate formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxModel {
    pub omega_bare: f64,
    pub omega_damped: f64,
    pub gamma: f64,
    pub v: f64,
    pub eta: f64,
    pub lambda_sq: f64,
    pub phi: f64,
    /// `N(ω_m)`, the bath occupation at the damped frequency.
    pub n_omega: f64,
    /// Effective occupation used by the weak-coupling diagnostic.
    pub n_eff: f64,
    /// Scattering phase entering `α = ψ − φ − θ`.
    pub theta: f64,
}

impl ApproxModel {
    /// Uses `N_eff ≈ N(ω_m)` and the first-order phase `θ ≈ η|λ|²v²/Ω`.
    pub fn new(cfg: &ModelConfig) -> Result<ApproxModel> {
        cfg.validate()?;
        let m = derive_mechanical(&cfg.mechanical)?;
        let n_omega = cfg.noise.resolved(m.omega_damped).eval(m.omega_damped);
        let el = cfg.optical.eta * cfg.optical.lambda_sq;
        Ok(ApproxModel {
            omega_bare: m.omega_bare,
            omega_damped: m.omega_damped,
            gamma: m.gamma,
            v: m.v,
            eta: cfg.optical.eta,
            lambda_sq: cfg.optical.lambda_sq,
            phi: cfg.optical.phi,
            n_omega,
            n_eff: n_omega,
            theta: el * m.v * m.v / m.omega_bare,
        })
    }

    /// Replaces the first-order `θ`, e.g. with the exact value, so that both
    /// paths are compared at the same `α`.
    pub fn with_theta(self, theta: f64) -> ApproxModel {
        ApproxModel { theta, ..self }
    }

    pub fn with_n_eff(self, n_eff: f64) -> ApproxModel {
        ApproxModel { n_eff, ..self }
    }

    pub fn alpha(&self, psi: f64) -> f64 {
        psi - self.phi - self.theta
    }

    /// `η|λ|²v²/Ω`.
    fn coupling(&self) -> f64 {
        self.eta * self.lambda_sq * self.v * self.v / self.omega_bare
    }

    pub fn e_factor(&self, mu: f64) -> f64 {
        let x = mu / self.omega_bare;
        self.coupling() + self.gamma / (2.0 * self.omega_damped) * (2.0 * self.n_omega + 1.0) * (1.0 + x * x)
    }

    /// `[γ²/4 + (μ+ω)²][γ²/4 + (μ−ω)²]`.
    fn lorentz_pair(&self, mu: f64) -> f64 {
        let a = 0.25 * self.gamma * self.gamma;
        (a + (mu + self.omega_damped).powi(2)) * (a + (mu - self.omega_damped).powi(2))
    }

    pub fn sigma_minus_at(&self, mu: f64, alpha: f64) -> f64 {
        let o = self.omega_bare;
        let x = mu / o;
        let pre = 2.0 * self.eta * self.lambda_sq * self.v * self.v * o * o * o / self.lorentz_pair(mu);
        let two_a = 2.0 * alpha;
        pre * ((1.0 - x * x) * two_a.sin() + self.e_factor(mu) * (1.0 - two_a.cos()))
    }

    pub fn sigma_zero_at(&self, mu: f64, alpha: f64) -> f64 {
        let o = self.omega_bare;
        4.0 * self.eta * self.eta.sqrt() * self.lambda_sq * self.v * self.v * o * (o * o - mu * mu) * alpha.sin()
            / self.lorentz_pair(mu)
    }

    pub fn sigma_minus(&self, mu_grid: &[f64], psi: f64) -> Result<SpectralCurve> {
        let a = self.alpha(psi);
        self.curve("sigma_minus", Some(psi), mu_grid, |mu| self.sigma_minus_at(mu, a))
    }

    pub fn sigma_zero(&self, mu_grid: &[f64], psi: f64) -> Result<SpectralCurve> {
        let a = self.alpha(psi);
        self.curve("sigma_zero", Some(psi), mu_grid, |mu| self.sigma_zero_at(mu, a))
    }

    /// `2α₀` minimising `Σ₋(0)`, in `(−π, 0)`.
    pub fn two_alpha0(&self) -> f64 {
        (-1.0f64).atan2(self.e_factor(0.0))
    }

    /// `ψ₀ ∈ [0, 2π)` and the minimum `Σ₋(0)|ψ₀`.
    pub fn psi0(&self) -> (f64, f64) {
        let e0 = self.e_factor(0.0);
        let psi0 = (0.5 * self.two_alpha0() + self.phi + self.theta).rem_euclid(TWO_PI);
        let min = 2.0 * self.coupling() * (e0 - e0.hypot(1.0));
        (psi0, min)
    }

    /// `Δ²±(μ)`, the extreme two-mode quadrature variances over `ψ`.
    pub fn delta2_at(&self, mu: f64) -> (f64, f64) {
        let o = self.omega_bare;
        let x = mu / o;
        let one_m = 1.0 - x * x;
        let w = self.omega_damped / o;
        let den = one_m * one_m + 4.0 * (1.0 - w * w) * x * x;
        let pre = 2.0 * self.eta * self.lambda_sq * self.v * self.v / (o * den);
        let e = self.e_factor(mu);
        let r = one_m.hypot(e);
        (1.0 + pre * (e - r), 1.0 + pre * (e + r))
    }

    pub fn delta2_bounds(&self, mu_grid: &[f64]) -> Result<(SpectralCurve, SpectralCurve)> {
        Ok((
            self.curve("delta2_lower", None, mu_grid, |mu| self.delta2_at(mu).0)?,
            self.curve("delta2_upper", None, mu_grid, |mu| self.delta2_at(mu).1)?,
        ))
    }

    pub fn regime_check(&self, th: RegimeThresholds) -> RegimeReport {
        let scale = self.v * self.v * self.omega_bare / (2.0 * self.omega_damped);
        let weak_cond1 = (self.n_eff + 0.5) * scale;
        let a = self.eta * self.lambda_sq * self.v.powi(4) * self.omega_bare / (4.0 * self.gamma * self.omega_damped);
        let weak_cond2 = if scale > 0.0 { a * a / scale } else { 0.0 };
        let strong_cond1 = self.coupling() / (self.gamma / self.omega_damped * (self.n_omega + 0.5));
        let e0 = self.e_factor(0.0);
        RegimeReport {
            weak_cond1,
            weak_cond2,
            strong_cond1,
            strong_cond2: e0 * e0,
            weak1_ok: weak_cond1 < th.small,
            weak2_ok: weak_cond2 < th.small && scale < th.small,
            strong1_ok: strong_cond1 > th.large,
            strong2_ok: e0 * e0 > th.large,
            thresholds: th,
        }
    }

    fn curve<F: Fn(f64) -> f64>(
        &self,
        label: &str,
        psi: Option<f64>,
        mu_grid: &[f64],
        f: F,
    ) -> Result<SpectralCurve> {
        check_grid(mu_grid)?;
        SpectralCurve::new(
            label,
            psi,
            Method::Approx,
            mu_grid.to_vec(),
            mu_grid.iter().map(|&mu| f(mu)).collect(),
            vec![0.0; mu_grid.len()],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference() -> ApproxModel {
        ApproxModel::new(&ModelConfig::reference()).unwrap()
    }

    #[test]
    fn e_factor_values() {
        let m = reference();
        assert!((m.e_factor(0.0) - 1.1).abs() < 1e-12);
        assert!((m.e_factor(1.0) - 1.2).abs() < 1e-12);
        let mut c = ModelConfig::reference();
        c.optical.lambda_sq = 0.0;
        let m0 = ApproxModel::new(&c).unwrap();
        assert!((m0.e_factor(2.0) - 0.1 * 5.0).abs() < 1e-12);
    }

    #[test]
    fn reference_minimum_and_maximum() {
        let m = reference();
        let (psi0, min) = m.psi0();
        // independent: 2(E − √(E²+1)) with E = 1.1
        let e: f64 = 1.1;
        assert!((min - 2.0 * (e - (e * e + 1.0).sqrt())).abs() < 1e-12);
        assert!((min + 0.773214).abs() < 1e-6);
        assert!((m.sigma_minus_at(0.0, m.alpha(psi0)) - min).abs() < 1e-12);
        let max = m.sigma_minus_at(0.0, m.alpha(psi0 + std::f64::consts::FRAC_PI_2));
        assert!((max - 5.173214).abs() < 1e-6);
        assert!((1.0 + 0.9 * min - 0.304108).abs() < 1e-6);
    }

    #[test]
    fn delta2_reference_points() {
        let m = reference();
        let (lo, hi) = m.delta2_at(0.0);
        assert!((lo - 0.226786).abs() < 1e-5);
        assert!((hi - 6.173214).abs() < 1e-5);
        for mu in [1.0, -1.0] {
            assert_eq!(m.delta2_at(mu).0, 1.0);
        }
        let hi1 = m.delta2_at(1.0).1;
        // 1 + 2·2E(1)/γ² with E(1) = 1.2
        let g = m.gamma;
        assert!((hi1 - (1.0 + 4.0 * 1.2 / (g * g))).abs() < 1e-9);
        assert!((hi1 - 122.2).abs() < 1.222);
    }

    #[test]
    fn vanishing_cases() {
        let m = reference();
        assert_eq!(m.sigma_minus_at(0.7, 0.0), 0.0);
        assert_eq!(m.sigma_zero_at(0.7, 0.0), 0.0);
        assert_eq!(m.sigma_zero_at(1.0, 0.9), 0.0);
        let mut c = ModelConfig::reference();
        c.mechanical.v = 0.0;
        let z = ApproxModel::new(&c).unwrap();
        assert_eq!(z.sigma_minus_at(0.3, 1.0), 0.0);
        let r = z.regime_check(RegimeThresholds::default());
        assert_eq!((r.weak_cond1, r.weak_cond2), (0.0, 0.0));
    }

    #[test]
    fn regime_report_reference_values() {
        let r = reference().regime_check(RegimeThresholds::default());
        assert!((r.weak_cond1 - 0.0025).abs() < 2e-5);
        assert!(r.weak1_ok);
        assert!((r.strong_cond1 - 10.0).abs() < 1e-9);
        assert!(!r.strong1_ok);
        assert!((r.strong_cond2 - 1.21).abs() < 1e-12);
    }

    #[test]
    fn quadrature_representation() {
        // 1 + Σ₋ at ψ₀ and ψ₀ ± π/2 reproduces Δ²∓
        let m = reference();
        for mu in [0.0, 0.4, 1.7] {
            let e = m.e_factor(mu);
            let x = mu / m.omega_bare;
            let two_a = (-(1.0 - x * x)).atan2(e);
            let (lo, hi) = m.delta2_at(mu);
            let s0 = m.sigma_minus_at(mu, 0.5 * two_a);
            let s1 = m.sigma_minus_at(mu, 0.5 * two_a + std::f64::consts::FRAC_PI_2);
            let s2 = m.sigma_minus_at(mu, 0.5 * two_a - std::f64::consts::FRAC_PI_2);
            assert!((1.0 + s0 - lo).abs() < 1e-12);
            assert!((1.0 + s1 - hi).abs() < 1e-12 * hi);
            assert!((1.0 + s2 - hi).abs() < 1e-12 * hi);
        }
    }

    proptest! {
        #[test]
        fn heisenberg_and_squeezing(mu in -5.0f64..5.0, cpl in 0.01f64..10.0, gw in 0.01f64..1.0, n in 0.0f64..3.0) {
            let mut c = ModelConfig::reference();
            c.mechanical.gamma = 2.0 * gw / (1.0 + gw * gw).sqrt();
            c.optical.lambda_sq = cpl / (c.optical.eta * c.mechanical.v * c.mechanical.v);
            let m = ApproxModel { n_omega: n, ..ApproxModel::new(&c).unwrap() };
            let (lo, hi) = m.delta2_at(mu);
            prop_assert!(lo <= 1.0 + 1e-12);
            prop_assert!(lo * hi >= 1.0 - 1e-10);
            let sym = m.delta2_at(-mu);
            prop_assert_eq!(sym, (lo, hi));
        }
    }
}

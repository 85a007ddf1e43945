//! Mechanical-oscillator observables: equilibrium moments, the general
//! second moments for arbitrary bath coupling, and the mean trajectory.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSet;
use crate::model::{DerivedMechanical, ModelConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumMoments {
    pub q_mean: f64,
    pub p_mean: f64,
    pub q_var: f64,
    pub p_var: f64,
    /// `⟨{q, p}⟩`.
    pub qp_anticomm: f64,
}

/// Drift `vη|λ|²` of the momentum: kick times the photon flux reaching the
/// mirror.
fn drift(cfg: &ModelConfig) -> f64 {
    cfg.mechanical.v * cfg.optical.eta * cfg.optical.lambda_sq
}

pub fn q_infinity(cfg: &ModelConfig) -> f64 {
    drift(cfg) / cfg.mechanical.omega_bare
}

pub fn equilibrium_moments(cfg: &ModelConfig, mech: &DerivedMechanical, n_eff: f64) -> EquilibriumMoments {
    let th = n_eff + 0.5;
    let el = cfg.optical.eta * cfg.optical.lambda_sq;
    let var = mech.omega_bare / mech.omega_damped * th + el * mech.v * mech.v / (2.0 * mech.gamma);
    EquilibriumMoments {
        q_mean: q_infinity(cfg),
        p_mean: 0.0,
        q_var: var,
        p_var: var,
        qp_anticomm: -mech.gamma / mech.omega_damped * th,
    }
}

/// Coefficients of the bath coupling operator `R = α_R q + β_R p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingCoefficients {
    pub alpha_r: f64,
    pub beta_r: Complex64,
}

impl CouplingCoefficients {
    /// The choice that makes the fluctuations equipartitioned for every bath
    /// spectrum: `α_R = √(γΩ/2ω)`, `β_R = iτα_R`.
    pub fn equipartition(mech: &DerivedMechanical) -> CouplingCoefficients {
        let a = (mech.gamma * mech.omega_bare / (2.0 * mech.omega_damped)).sqrt();
        CouplingCoefficients {
            alpha_r: a,
            beta_r: Complex64::i() * mech.tau * a,
        }
    }

    /// `β_R` rotated by `angle` and rescaled so that `α_R Im β_R = γ/2`.
    pub fn perturbed(mech: &DerivedMechanical, angle: f64) -> CouplingCoefficients {
        let base = Self::equipartition(mech);
        let rotated = base.beta_r * Complex64::cis(angle);
        CouplingCoefficients {
            alpha_r: base.alpha_r,
            beta_r: rotated * (0.5 * mech.gamma / (base.alpha_r * rotated.im)),
        }
    }

    pub fn validate(&self, mech: &DerivedMechanical) -> Result<()> {
        let prod = self.alpha_r * self.beta_r.im;
        if !(self.alpha_r >= 0.0) || (prod - 0.5 * mech.gamma).abs() > 1e-12 * mech.gamma || prod >= mech.omega_bare {
            return Err(Error::Config(format!(
                "coupling coefficients need alpha_R >= 0 and alpha_R Im beta_R = gamma/2 < Omega, got {prod}"
            )));
        }
        Ok(())
    }
}

/// Equilibrium `(⟨q²⟩ − q_∞², ⟨p²⟩)` for arbitrary coupling coefficients.
pub fn general_second_moments(coef: &CouplingCoefficients, kernels: &KernelSet, cfg: &ModelConfig) -> Result<(f64, f64)> {
    let m = *kernels.mechanical();
    coef.validate(&m)?;
    let (o, w, g, tau) = (m.omega_bare, m.omega_damped, m.gamma, m.tau);
    let x = tau * coef.alpha_r + Complex64::i() * coef.beta_r;
    let y = tau * coef.alpha_r + Complex64::i() * coef.beta_r.conj();
    let xy = x * y;
    let tb = tau.conj();
    let pre = o * o / (4.0 * w * w);
    let base = cfg.optical.eta * cfg.optical.lambda_sq * m.v * m.v / (2.0 * g);
    let sym = (x.norm_sqr() + y.norm_sqr()) / g;
    let q_const = base + pre * (sym + (Complex64::i() * tb * tb * tb * xy).re / (2.0 * o));
    let p_const = base + pre * (sym - (Complex64::i() * tb * xy).re / (2.0 * o));

    let a = 0.25 * g * g;
    let lor = |nu: f64| {
        (
            x.norm_sqr() / (a + (w + nu) * (w + nu)) + y.norm_sqr() / (a + (w - nu) * (w - nu)),
            xy / (Complex64::new(0.5 * g, w + nu) * Complex64::new(0.5 * g, w - nu)),
        )
    };
    let noise = kernels.noise();
    let scale = pre / std::f64::consts::PI;
    let q_int = kernels.bath_integral(w, |nu| {
        let (l, c) = lor(nu);
        scale * noise.eval(nu) * (l - 2.0 * (tb * tb * c).re)
    })?;
    let p_int = kernels.bath_integral(w, |nu| {
        let (l, c) = lor(nu);
        scale * noise.eval(nu) * (l + 2.0 * c.re)
    })?;
    Ok((q_const + q_int, p_const + p_int))
}

/// Closed-form mean `(⟨q⟩, ⟨p⟩)(t)` of the damped, driven oscillator.
pub fn mean_exact(cfg: &ModelConfig, mech: &DerivedMechanical, q0: f64, p0: f64, t: f64) -> (f64, f64) {
    let (o, w, g) = (mech.omega_bare, mech.omega_damped, mech.gamma);
    let qi = q_infinity(cfg);
    let d = q0 - qi;
    let env = (-0.5 * g * t).exp();
    let (s, c) = (w * t).sin_cos();
    let b = (g * d + 2.0 * o * p0) / (2.0 * w);
    let q = qi + env * (d * c + b * s);
    // p = q̇/Ω
    let dq = env * ((-0.5 * g) * (d * c + b * s) + w * (-d * s + b * c));
    (q, dq / o)
}

/// Integrates the mean equations of motion with classical RK4, one step per
/// interval of `t_grid`.
pub fn mean_trajectory(cfg: &ModelConfig, q0: f64, p0: f64, t_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    cfg.mechanical.validate()?;
    let o = cfg.mechanical.omega_bare;
    let g = cfg.mechanical.gamma;
    let f0 = drift(cfg);
    let limit = 0.1 / o;
    if t_grid.first().is_some_and(|&t| t != 0.0) {
        return Err(Error::Config("time grid must start at 0".into()));
    }
    for w in t_grid.windows(2) {
        let dt = w[1] - w[0];
        if !(dt > 0.0) {
            return Err(Error::Config("time grid must be strictly increasing".into()));
        }
        if dt > limit {
            return Err(Error::StepSize { dt, limit });
        }
    }
    let rhs = |q: f64, p: f64| (o * p, -o * q - g * p + f0);
    let mut out = Vec::with_capacity(t_grid.len());
    let (mut q, mut p) = (q0, p0);
    if !t_grid.is_empty() {
        out.push((q, p));
    }
    for w in t_grid.windows(2) {
        let h = w[1] - w[0];
        let k1 = rhs(q, p);
        let k2 = rhs(q + 0.5 * h * k1.0, p + 0.5 * h * k1.1);
        let k3 = rhs(q + 0.5 * h * k2.0, p + 0.5 * h * k2.1);
        let k4 = rhs(q + h * k3.0, p + h * k3.1);
        q += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        p += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        out.push((q, p));
    }
    Ok(out)
}

pub fn uniform_grid(t_end: f64, dt: f64) -> Vec<f64> {
    let n = (t_end / dt).round() as usize;
    (0..=n).map(|i| i as f64 * dt).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::NoiseSpectrum;
    use crate::model::{derive_mechanical, GMode};
    use crate::quadrature::QuadConfig;
    use proptest::prelude::*;

    fn cfg(v: f64) -> ModelConfig {
        let mut c = ModelConfig::reference();
        c.mechanical.v = v;
        c
    }

    #[test]
    fn ground_state_and_reference_shift() {
        let c = cfg(0.0);
        let m = derive_mechanical(&c.mechanical).unwrap();
        let e = equilibrium_moments(&c, &m, 0.0);
        assert_eq!(e.q_mean, 0.0);
        assert!((e.q_var - 1.0 / (2.0 * m.omega_damped)).abs() < 1e-15);
        let c = cfg(0.1);
        let e = equilibrium_moments(&c, &m, 0.7);
        assert!((e.q_mean - 10.0).abs() < 1e-12);
        assert_eq!(e.q_var - e.p_var, 0.0);
    }

    #[test]
    fn equipartition_coefficients() {
        let m = derive_mechanical(&cfg(0.1).mechanical).unwrap();
        let c = CouplingCoefficients::equipartition(&m);
        c.validate(&m).unwrap();
        let x = m.tau * c.alpha_r + Complex64::i() * c.beta_r;
        assert!(x.norm() < 1e-15);
        let p = CouplingCoefficients::perturbed(&m, 0.3);
        p.validate(&m).unwrap();
        assert!((p.beta_r.arg() - c.beta_r.arg() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn vacuum_general_moments_reproduce_closed_form() {
        let c = cfg(0.1);
        let m = derive_mechanical(&c.mechanical).unwrap();
        let k = KernelSet::new(m, &NoiseSpectrum::Vacuum, GMode::Quadrature, QuadConfig::default()).unwrap();
        let (qv, pv) = general_second_moments(&CouplingCoefficients::equipartition(&m), &k, &c).unwrap();
        let e = equilibrium_moments(&c, &m, 0.0);
        assert!((qv - e.q_var).abs() < 1e-12 * e.q_var);
        assert!((pv - e.p_var).abs() < 1e-12 * e.p_var);
    }

    #[test]
    fn thermal_general_moments_match_n_eff() {
        let c = cfg(0.1);
        let m = derive_mechanical(&c.mechanical).unwrap();
        let noise = NoiseSpectrum::Constant { n0: 0.8, cutoff: 10.0 };
        let k = KernelSet::new(m, &noise, GMode::Quadrature, QuadConfig::default()).unwrap();
        let (qv, pv) = general_second_moments(&CouplingCoefficients::equipartition(&m), &k, &c).unwrap();
        let e = equilibrium_moments(&c, &m, k.n_eff());
        assert!((qv - e.q_var).abs() < 1e-7 * e.q_var);
        assert!((pv - e.p_var).abs() < 1e-7 * e.p_var);
    }

    #[test]
    fn fixed_point_is_stationary() {
        let c = cfg(0.1);
        let grid = uniform_grid(20.0, 0.01);
        let tr = mean_trajectory(&c, q_infinity(&c), 0.0, &grid).unwrap();
        for &(q, p) in &tr {
            assert!((q - 10.0).abs() < 1e-12 && p.abs() < 1e-12);
        }
    }

    #[test]
    fn free_decay() {
        let c = cfg(0.0);
        let g = c.mechanical.gamma;
        let grid = uniform_grid(10.0 / g, 0.01);
        let tr = mean_trajectory(&c, 1.0, 0.0, &grid).unwrap();
        assert!(tr.last().unwrap().0.abs() < 0.01);
    }

    #[test]
    fn rk4_matches_closed_form() {
        let c = cfg(0.1);
        let m = derive_mechanical(&c.mechanical).unwrap();
        let grid = uniform_grid(30.0, 1e-3);
        let tr = mean_trajectory(&c, 2.0, -1.0, &grid).unwrap();
        for (i, &t) in grid.iter().enumerate().step_by(997) {
            let (q, p) = mean_exact(&c, &m, 2.0, -1.0, t);
            assert!((tr[i].0 - q).abs() < 1e-8 && (tr[i].1 - p).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn step_size_guard() {
        let c = cfg(0.1);
        assert!(matches!(
            mean_trajectory(&c, 0.0, 0.0, &[0.0, 0.2]),
            Err(Error::StepSize { .. })
        ));
    }

    #[test]
    fn energy_envelope_decays() {
        let c = cfg(0.1);
        let m = derive_mechanical(&c.mechanical).unwrap();
        let period = 2.0 * std::f64::consts::PI / m.omega_damped;
        let dt = period / 200.0;
        let grid = uniform_grid(20.0 * period, dt);
        let tr = mean_trajectory(&c, 13.0, 1.0, &grid).unwrap();
        let qi = q_infinity(&c);
        let energy: Vec<f64> = (0..=20).map(|k| {
            let (q, p) = tr[k * 200];
            (q - qi).powi(2) + p * p
        }).collect();
        assert!(energy.windows(2).all(|w| w[1] < w[0]));
    }

    proptest! {
        #[test]
        fn q_inf_linear(v in -2.0f64..2.0, eta in 0.01f64..0.99, l in 0.0f64..1e4, s in 0.1f64..3.0) {
            let mut c = cfg(v);
            c.optical.eta = eta;
            c.optical.lambda_sq = l;
            let base = q_infinity(&c);
            prop_assert!((base - v * eta * l).abs() <= 1e-12 * (1.0 + base.abs()));
            c.mechanical.v = v * s;
            prop_assert!((q_infinity(&c) - s * base).abs() <= 1e-12 * (1.0 + base.abs() * s));
        }
    }
}

//! Time-domain kernels of the scattering problem and the thermal bath
//! spectrum `N(ν)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DerivedMechanical, GMode};
use crate::quadrature::{integrate_interval, QuadConfig};

/// Power spectrum `N(ν) ≥ 0` of the stationary Gaussian process driving the
/// oscillator's thermal bath.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpectrum {
    Vacuum,
    /// `N₀` on `|ν| ≤ cutoff`.
    Constant { n0: f64, cutoff: f64 },
    /// `1/(e^{ν/T} − 1)` on `(nu_min, cutoff]`. When `nu_min` is absent the
    /// kernels use `1e-3·ω_m` to stay clear of the infrared divergence.
    BoseEinstein {
        temperature: f64,
        cutoff: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nu_min: Option<f64>,
    },
    /// Linear interpolation of the samples, zero outside the table.
    Tabulated { nu: Vec<f64>, n: Vec<f64> },
}

impl NoiseSpectrum {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match self {
            NoiseSpectrum::Vacuum => Ok(()),
            NoiseSpectrum::Constant { n0, cutoff } => {
                if !(*n0 >= 0.0 && n0.is_finite()) || !(*cutoff > 0.0 && cutoff.is_finite()) {
                    return bad(format!("constant spectrum needs n0 >= 0 and cutoff > 0, got {n0}, {cutoff}"));
                }
                Ok(())
            }
            NoiseSpectrum::BoseEinstein {
                temperature,
                cutoff,
                nu_min,
            } => {
                if !(*temperature > 0.0 && temperature.is_finite()) || !(*cutoff > 0.0 && cutoff.is_finite()) {
                    return bad(format!(
                        "Bose-Einstein spectrum needs temperature > 0 and cutoff > 0, got {temperature}, {cutoff}"
                    ));
                }
                if let Some(m) = nu_min {
                    if !(*m > 0.0 && m < cutoff) {
                        return bad(format!("nu_min must lie in (0, cutoff), got {m}"));
                    }
                }
                Ok(())
            }
            NoiseSpectrum::Tabulated { nu, n } => {
                if nu.len() != n.len() || nu.len() < 2 {
                    return bad("tabulated spectrum needs two equally long columns with at least two rows".into());
                }
                if nu.windows(2).any(|w| !(w[1] > w[0])) || nu.iter().any(|x| !x.is_finite()) {
                    return bad("tabulated frequencies must be finite and strictly increasing".into());
                }
                if n.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                    return bad("tabulated spectrum must be finite and non-negative".into());
                }
                Ok(())
            }
        }
    }

    pub fn is_vacuum(&self) -> bool {
        match self {
            NoiseSpectrum::Vacuum => true,
            NoiseSpectrum::Constant { n0, .. } => *n0 == 0.0,
            NoiseSpectrum::Tabulated { n, .. } => n.iter().all(|&x| x == 0.0),
            NoiseSpectrum::BoseEinstein { .. } => false,
        }
    }

    /// Fills in the default infrared cutoff of the Bose–Einstein preset.
    pub fn resolved(&self, omega_damped: f64) -> NoiseSpectrum {
        match self {
            NoiseSpectrum::BoseEinstein {
                temperature,
                cutoff,
                nu_min: None,
            } => NoiseSpectrum::BoseEinstein {
                temperature: *temperature,
                cutoff: *cutoff,
                nu_min: Some(1e-3 * omega_damped),
            },
            other => other.clone(),
        }
    }

    /// `N(ν)`. An unresolved Bose–Einstein preset is evaluated for every `ν > 0`.
    pub fn eval(&self, nu: f64) -> f64 {
        match self {
            NoiseSpectrum::Vacuum => 0.0,
            NoiseSpectrum::Constant { n0, cutoff } => {
                if nu.abs() <= *cutoff {
                    *n0
                } else {
                    0.0
                }
            }
            NoiseSpectrum::BoseEinstein {
                temperature,
                cutoff,
                nu_min,
            } => {
                if nu > nu_min.unwrap_or(0.0) && nu <= *cutoff {
                    1.0 / (nu / temperature).exp_m1()
                } else {
                    0.0
                }
            }
            NoiseSpectrum::Tabulated { nu: xs, n } => {
                if nu < xs[0] || nu > xs[xs.len() - 1] {
                    return 0.0;
                }
                let k = xs.partition_point(|&x| x <= nu).clamp(1, xs.len() - 1);
                let (x0, x1) = (xs[k - 1], xs[k]);
                let w = (nu - x0) / (x1 - x0);
                n[k - 1] + w * (n[k] - n[k - 1])
            }
        }
    }

    /// Interval outside which `N` vanishes, or `None` for the vacuum.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            NoiseSpectrum::Vacuum => None,
            NoiseSpectrum::Constant { cutoff, .. } => Some((-cutoff, *cutoff)),
            NoiseSpectrum::BoseEinstein { cutoff, nu_min, .. } => Some((nu_min.unwrap_or(0.0), *cutoff)),
            NoiseSpectrum::Tabulated { nu, .. } => Some((nu[0], nu[nu.len() - 1])),
        }
    }

    /// Points where `N` is not smooth.
    fn kinks(&self) -> Vec<f64> {
        match self {
            NoiseSpectrum::Tabulated { nu, .. } if nu.len() <= 512 => nu.clone(),
            _ => Vec::new(),
        }
    }
}

/// The kernels `h`, `l`, `g` and bath functionals with all prefactors bound.
#[derive(Debug, Clone)]
pub struct KernelSet {
    mech: DerivedMechanical,
    noise: NoiseSpectrum,
    g_mode: GMode,
    quad: QuadConfig,
    /// `v²Ω/(2ω)`.
    scale: f64,
    /// Amplitude `−i v τ √(Ωγ/2ω)` of `l`.
    l_amp: Complex64,
    n_at_omega: f64,
    n_eff: f64,
}

impl KernelSet {
    pub fn new(
        mech: DerivedMechanical,
        noise: &NoiseSpectrum,
        g_mode: GMode,
        quad: QuadConfig,
    ) -> Result<KernelSet> {
        noise.validate()?;
        let noise = noise.resolved(mech.omega_damped);
        let scale = mech.kick_scale();
        let l_amp = Complex64::new(0.0, -mech.v)
            * mech.tau
            * (mech.omega_bare * mech.gamma / (2.0 * mech.omega_damped)).sqrt();
        let n_at_omega = noise.eval(mech.omega_damped);
        let mut ks = KernelSet {
            mech,
            noise,
            g_mode,
            quad,
            scale,
            l_amp,
            n_at_omega,
            n_eff: 0.0,
        };
        ks.n_eff = match g_mode {
            GMode::Flat => n_at_omega,
            GMode::Quadrature => ks.lorentz_average()?,
        };
        Ok(ks)
    }

    pub fn mechanical(&self) -> &DerivedMechanical {
        &self.mech
    }

    pub fn noise(&self) -> &NoiseSpectrum {
        &self.noise
    }

    pub fn g_mode(&self) -> GMode {
        self.g_mode
    }

    pub fn quad(&self) -> &QuadConfig {
        &self.quad
    }

    /// `v²Ω/(2ω)`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn n_at_omega(&self) -> f64 {
        self.n_at_omega
    }

    /// Bath occupation seen through the oscillator's Lorentzian response.
    pub fn n_eff(&self) -> f64 {
        self.n_eff
    }

    pub fn h(&self, t: f64) -> f64 {
        let m = &self.mech;
        self.scale * (-0.5 * m.gamma * t.abs()).exp() * (m.omega_damped * t).sin()
    }

    pub fn l(&self, t: f64) -> Complex64 {
        let m = &self.mech;
        self.l_amp * (-0.5 * m.gamma * t.abs()).exp() * Complex64::cis(m.omega_damped * t)
    }

    pub fn g(&self, t: f64) -> Result<f64> {
        let m = &self.mech;
        let env = (-0.5 * m.gamma * t.abs()).exp() * (m.omega_damped * t).cos();
        match self.g_mode {
            GMode::Flat => Ok(self.scale * env * (2.0 * self.n_at_omega + 1.0)),
            GMode::Quadrature => {
                if self.noise.is_vacuum() {
                    return Ok(self.scale * env);
                }
                let (g, w) = (m.gamma, m.omega_damped);
                let thermal = self.bath_integral(t.abs().max(w), |nu| {
                    g * self.noise.eval(nu) * (nu * t).cos() / (PI * ((nu - w) * (nu - w) + 0.25 * g * g))
                })?;
                Ok(self.scale * (env + thermal))
            }
        }
    }

    /// `g(t) + i h(t)`.
    pub fn g_plus_ih(&self, t: f64) -> Result<Complex64> {
        Ok(Complex64::new(self.g(t)?, self.h(t)))
    }

    /// `F(t) = (1/2π)∫ e^{iνt} N(ν) dν`.
    pub fn autocov_f(&self, t: f64) -> Result<Complex64> {
        let Some((lo, hi)) = self.noise.support() else {
            return Ok(Complex64::new(0.0, 0.0));
        };
        let width = std::f64::consts::FRAC_PI_4 / t.abs().max(1e-300).max(4.0 / (hi - lo));
        let r = integrate_interval(
            |nu: f64| Complex64::cis(nu * t) * self.noise.eval(nu),
            lo,
            hi,
            width,
            &self.noise.kinks(),
            &self.quad,
        )?;
        Ok(r.value / (2.0 * PI))
    }

    /// `Im⟨ℓ_s|ℓ_t⟩` with `ℓ_t(u) = l(t−u)` on `(0, t)`.
    pub fn im_inner_ell(&self, s: f64, t: f64) -> f64 {
        if s <= 0.0 || t <= 0.0 {
            return 0.0;
        }
        let m = &self.mech;
        let lo = s.min(t);
        // |l-amplitude|²/γ = v²Ω/(2ω)
        let radial = ((-0.5 * m.gamma * (s + t) + m.gamma * lo).exp() - (-0.5 * m.gamma * (s + t)).exp())
            * self.scale;
        radial * (m.omega_damped * (t - s)).sin()
    }

    /// `‖ℓ_t‖² = (v²Ω/2ω)(1 − e^{−γt})`.
    pub fn ell_norm_sq(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        -self.scale * (-self.mech.gamma * t).exp_m1()
    }

    fn lorentz_average(&self) -> Result<f64> {
        if self.noise.is_vacuum() {
            return Ok(0.0);
        }
        let (g, w) = (self.mech.gamma, self.mech.omega_damped);
        self.bath_integral(w, |nu| {
            (g / (2.0 * PI)) * self.noise.eval(nu) / (0.25 * g * g + (w - nu) * (w - nu))
        })
    }

    /// Integral of `f` over the support of `N`, with panels resolving the
    /// Lorentzian peaks at `±ω_m` and oscillations of frequency `osc`.
    pub(crate) fn bath_integral<F: Fn(f64) -> f64>(&self, osc: f64, f: F) -> Result<f64> {
        let Some((lo, hi)) = self.noise.support() else {
            return Ok(0.0);
        };
        let (g, w) = (self.mech.gamma, self.mech.omega_damped);
        let mut cuts: Vec<f64> = [-2.0, -0.5, 0.0, 0.5, 2.0]
            .iter()
            .flat_map(|&k| [w + k * g, -w + k * g])
            .collect();
        cuts.extend(self.noise.kinks());
        let width = (std::f64::consts::FRAC_PI_4 / osc.max(1e-300)).min(g);
        Ok(integrate_interval(f, lo, hi, width, &cuts, &self.quad)?.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_mechanical, MechanicalParams};
    use crate::quadrature::integrate_semi_infinite;

    fn mech(v: f64) -> DerivedMechanical {
        derive_mechanical(&MechanicalParams {
            omega_bare: 1.0,
            gamma: 0.199007,
            v,
        })
        .unwrap()
    }

    fn kernels(v: f64, noise: NoiseSpectrum, mode: GMode) -> KernelSet {
        KernelSet::new(mech(v), &noise, mode, QuadConfig::default()).unwrap()
    }

    #[test]
    fn h_values() {
        let k = kernels(0.1, NoiseSpectrum::Vacuum, GMode::Quadrature);
        assert_eq!(k.h(0.0), 0.0);
        let w = k.mechanical().omega_damped;
        let t = PI / (2.0 * w);
        // independent evaluation: 0.01/(2w)·exp(-γt/2)·sin(π/2)
        let expect = 0.01 / (2.0 * w) * (-0.199007 * t / 2.0).exp();
        assert!((k.h(t) - expect).abs() < 1e-15);
        assert!((k.h(t) - 0.0042944942).abs() < 1e-9);
        let k0 = kernels(0.0, NoiseSpectrum::Vacuum, GMode::Quadrature);
        assert_eq!(k0.h(3.7), 0.0);
        assert_eq!(k0.l(3.7), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn l_modulus_and_norm() {
        let k = kernels(0.3, NoiseSpectrum::Vacuum, GMode::Quadrature);
        let m = *k.mechanical();
        for &t in &[0.0, 0.7, 5.0, 31.0] {
            let expect = 0.3 * (m.gamma / (2.0 * m.omega_damped)).sqrt() * (-m.gamma * t / 2.0).exp();
            assert!((k.l(t).norm() - expect).abs() < 1e-15);
        }
        let r = integrate_semi_infinite(|t| k.l(t).norm_sqr(), m.gamma, m.omega_damped, &QuadConfig::default())
            .unwrap();
        assert!((r.value - k.scale()).abs() < 1e-8 * k.scale());
        assert!((k.ell_norm_sq(1e6) - k.scale()).abs() < 1e-15);
    }

    #[test]
    fn g_vacuum_closed_form() {
        let k = kernels(0.1, NoiseSpectrum::Vacuum, GMode::Quadrature);
        let m = *k.mechanical();
        assert!((k.g(0.0).unwrap() - 0.01 / (2.0 * m.omega_damped)).abs() < 1e-16);
        for &t in &[-3.0f64, 0.5, 9.0] {
            let e = k.scale() * (-m.gamma * t.abs() / 2.0).exp() * (m.omega_damped * t).cos();
            assert!((k.g(t).unwrap() - e).abs() < 1e-15 * k.scale());
        }
        let flat = kernels(0.1, NoiseSpectrum::Vacuum, GMode::Flat);
        for &t in &[0.0, 1.3, 17.0] {
            assert!((flat.g(t).unwrap() - k.g(t).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn parity() {
        let k = kernels(0.2, NoiseSpectrum::Constant { n0: 0.5, cutoff: 5.0 }, GMode::Quadrature);
        for &t in &[0.3, 2.0, 7.5] {
            assert_eq!(k.h(-t), -k.h(t));
            assert!((k.g(-t).unwrap() - k.g(t).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn n_eff_presets() {
        assert_eq!(kernels(0.1, NoiseSpectrum::Vacuum, GMode::Quadrature).n_eff(), 0.0);
        let k = kernels(0.1, NoiseSpectrum::Constant { n0: 2.0, cutoff: 20.0 }, GMode::Quadrature);
        let m = *k.mechanical();
        // closed form of the truncated Lorentzian
        let hw = m.gamma / 2.0;
        let exact = 2.0 / PI * (((20.0 - m.omega_damped) / hw).atan() + ((20.0 + m.omega_damped) / hw).atan());
        assert!((k.n_eff() - exact).abs() < 1e-8);
        assert!((k.n_eff() - 2.0).abs() < 0.02);
        let flat = kernels(0.1, NoiseSpectrum::Constant { n0: 2.0, cutoff: 20.0 }, GMode::Flat);
        assert_eq!(flat.n_eff(), 2.0);
    }

    #[test]
    fn bose_einstein_shape() {
        let n = NoiseSpectrum::BoseEinstein {
            temperature: 2.0,
            cutoff: 30.0,
            nu_min: None,
        }
        .resolved(0.995);
        assert_eq!(n.eval(-1.0), 0.0);
        assert_eq!(n.eval(5e-4), 0.0);
        assert_eq!(n.eval(31.0), 0.0);
        assert!((n.eval(1.0) - 1.0 / (0.5f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn tabulated_interpolation() {
        let n = NoiseSpectrum::Tabulated {
            nu: vec![0.0, 1.0, 3.0],
            n: vec![1.0, 3.0, 0.0],
        };
        n.validate().unwrap();
        assert_eq!(n.eval(-0.1), 0.0);
        assert_eq!(n.eval(0.5), 2.0);
        assert_eq!(n.eval(1.0), 3.0);
        assert_eq!(n.eval(2.0), 1.5);
        assert_eq!(n.eval(3.0), 0.0);
        assert!(NoiseSpectrum::Tabulated {
            nu: vec![0.0, 0.0],
            n: vec![1.0, 1.0]
        }
        .validate()
        .is_err());
        assert!(NoiseSpectrum::Tabulated {
            nu: vec![0.0, 1.0],
            n: vec![1.0, -1.0]
        }
        .validate()
        .is_err());
    }

    #[test]
    fn autocov_basic() {
        let k = kernels(0.1, NoiseSpectrum::Vacuum, GMode::Quadrature);
        assert_eq!(k.autocov_f(2.0).unwrap(), Complex64::new(0.0, 0.0));
        let k = kernels(0.1, NoiseSpectrum::Constant { n0: 1.5, cutoff: 3.0 }, GMode::Quadrature);
        let f0 = k.autocov_f(0.0).unwrap();
        assert!((f0.re - 1.5 * 6.0 / (2.0 * PI)).abs() < 1e-10);
        assert!(f0.im.abs() < 1e-14);
        // sinc closed form
        let t: f64 = 2.3;
        let exact = 1.5 * 2.0 * (3.0 * t).sin() / t / (2.0 * PI);
        let ft = k.autocov_f(t).unwrap();
        assert!((ft.re - exact).abs() < 1e-9);
        let fm = k.autocov_f(-t).unwrap();
        assert!((fm - ft.conj()).norm() < 1e-12);
    }

    #[test]
    fn im_inner_ell_against_quadrature() {
        let k = kernels(0.3, NoiseSpectrum::Vacuum, GMode::Quadrature);
        let q = QuadConfig::default();
        for &(s, t) in &[(1.0, 2.5), (4.0, 0.7), (3.0, 3.0), (12.0, 9.0)] {
            let lo = f64::min(s, t);
            let direct = integrate_interval(
                |u: f64| (k.l(s - u).conj() * k.l(t - u)).im,
                0.0,
                lo,
                0.2,
                &[],
                &q,
            )
            .unwrap()
            .value;
            assert!((k.im_inner_ell(s, t) - direct).abs() < 1e-12, "{s} {t}");
        }
        assert_eq!(k.im_inner_ell(2.0, 2.0), 0.0);
        let g = k.mechanical().gamma;
        for &(s, t) in &[(20.0 / g, 20.0 / g + 1.3), (22.0 / g, 21.0 / g)] {
            assert!((k.im_inner_ell(s, t) - k.h(t - s)).abs() < 1e-6 * k.scale());
        }
        let k0 = kernels(0.0, NoiseSpectrum::Vacuum, GMode::Quadrature);
        assert_eq!(k0.im_inner_ell(1.0, 2.0), 0.0);
    }
}

//! Dynamic constants, mean count rates and the exact reduced and intensity
//! spectra.
//!
//! The double integrals of the reduced spectra share the μ-independent inner
//! correlators
//!
//! ```text
//! C±(s) = ∫₀^∞ (e^{±2ih(u)} − 1)(e^{2ih(s+u)} − 1) du,
//! ```
//!
//! which are tabulated once per configuration on a uniform s-grid and
//! interpolated by a four-point cubic inside the outer integrals.
//!
//! The bracketed terms of `Σ₀` carry a `+ c.c.` which is taken to conjugate
//! the whole bracket, so every reduced spectrum is real and even in `μ`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSet;
use crate::model::{chi, derive_mechanical, DetectorParams, ModelConfig};
use crate::quadrature::{integrate_semi_infinite, FixedRule, QuadConfig, QuadResult};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// `e^z − 1` without cancellation for small `z`.
pub fn cexpm1(z: Complex64) -> Complex64 {
    let (s, c) = z.im.sin_cos();
    let half = (0.5 * z.im).sin();
    let em1 = z.re.exp_m1();
    Complex64::new(em1 * c - 2.0 * half * half, (em1 + 1.0) * s)
}

/// `e^{ix} − 1` for real `x`; a Taylor polynomial below `|x| = 0.1` avoids the
/// trigonometric calls in the correlator tables.
#[inline]
pub fn expm1_i(x: f64) -> Complex64 {
    if x.abs() < 0.1 {
        let x2 = x * x;
        // truncation error below x¹²/12! ≈ 2e-21 relative
        let re = -x2 * (0.5 - x2 * (1.0 / 24.0 - x2 * (1.0 / 720.0 - x2 * (1.0 / 40320.0 - x2 / 3628800.0))));
        let im = x * (1.0 - x2 * (1.0 / 6.0 - x2 * (1.0 / 120.0 - x2 * (1.0 / 5040.0 - x2 / 362880.0))));
        Complex64::new(re, im)
    } else {
        let (sh, ch) = (0.5 * x).sin_cos();
        Complex64::new(-2.0 * sh * sh, 2.0 * sh * ch)
    }
}

/// Dynamics-dependent scalars consumed by the final formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicConstants {
    pub n_eff: f64,
    /// Thermal Weyl decay exponent.
    pub k: f64,
    /// Electromagnetic Weyl decay exponent.
    pub m: f64,
    pub theta: f64,
    /// `α = ψ − φ − θ`.
    pub alpha_phase: f64,
    pub z: Complex64,
    pub err_m: f64,
    pub err_theta: f64,
    pub err_z: f64,
}

impl DynamicConstants {
    /// `e^{−(K+M)}`.
    pub fn damping(&self) -> f64 {
        (-(self.k + self.m)).exp()
    }

    /// `α` for a different interferometer phase `ψ`.
    pub fn alpha_at(&self, psi: f64, phi: f64) -> f64 {
        psi - phi - self.theta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Approx,
}

/// Values of one spectral quantity on a frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCurve {
    pub label: String,
    pub psi: Option<f64>,
    pub method: Method,
    pub mu_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub err_estimates: Vec<f64>,
}

impl SpectralCurve {
    pub fn new(
        label: impl Into<String>,
        psi: Option<f64>,
        method: Method,
        mu_grid: Vec<f64>,
        values: Vec<f64>,
        err_estimates: Vec<f64>,
    ) -> Result<SpectralCurve> {
        check_grid(&mu_grid)?;
        if values.len() != mu_grid.len() || err_estimates.len() != mu_grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} grid points but {} values and {} error estimates",
                mu_grid.len(),
                values.len(),
                err_estimates.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite spectrum value at mu = {}", mu_grid[i])));
        }
        Ok(SpectralCurve {
            label: label.into(),
            psi,
            method,
            mu_grid,
            values,
            err_estimates,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn check_grid(mu_grid: &[f64]) -> Result<()> {
    if mu_grid.iter().any(|m| !m.is_finite()) || mu_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("frequency grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Which photocurrent an intensity spectrum describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurrentKind {
    Port1,
    Port2,
    Sum,
    Diff,
}

impl CurrentKind {
    pub const ALL: [CurrentKind; 4] = [CurrentKind::Port1, CurrentKind::Port2, CurrentKind::Sum, CurrentKind::Diff];

    pub fn name(self) -> &'static str {
        match self {
            CurrentKind::Port1 => "port1",
            CurrentKind::Port2 => "port2",
            CurrentKind::Sum => "sum",
            CurrentKind::Diff => "diff",
        }
    }
}

/// Intensity spectrum split into the coefficient of `2πc²δ(μ)` and the
/// smooth, detector-filtered part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensitySpectrum {
    pub kind: CurrentKind,
    pub delta_weight: f64,
    pub smooth: SpectralCurve,
}

/// Port rates `n_j = (|λ|²/2)[1 + (−1)^j χ e^{−(K+M)} cos α]`.
///
/// The pair is adjusted in its last bits so that `n₁ + n₂` reproduces `|λ|²`
/// exactly in floating point.
pub fn mean_rates(cfg: &ModelConfig, dc: &DynamicConstants) -> (f64, f64) {
    rates_from_contrast(cfg.optical.lambda_sq, chi(&cfg.optical) * dc.damping() * dc.alpha_phase.cos())
}

pub(crate) fn rates_from_contrast(lambda_sq: f64, contrast: f64) -> (f64, f64) {
    let n1 = (0.5 * lambda_sq * (1.0 - contrast)).clamp(0.0, lambda_sq);
    // The larger rate is the exact complement of the smaller one up to half
    // an ulp, so the rounded sum lands on |λ|² unless it ties; nudging the
    // smaller rate breaks the tie.
    let mut small = n1.min(lambda_sq - n1);
    let mut big = lambda_sq - small;
    for _ in 0..8 {
        if small + big == lambda_sq {
            break;
        }
        small = small.next_up();
        big = lambda_sq - small;
    }
    if n1 <= 0.5 * lambda_sq {
        (small, big)
    } else {
        (big, small)
    }
}

/// Extremal squeezing at `μ = 0` over the interferometer phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremes {
    pub z: Complex64,
    /// Phase `ψ₀ ∈ [0, 2π)` of maximal squeezing, `None` when `Z ≈ 0`.
    pub psi0: Option<f64>,
    pub sigma_minus0_at_zero: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub err: f64,
}

impl Extremes {
    pub fn psi0(&self) -> Result<f64> {
        self.psi0.ok_or_else(|| {
            Error::Degenerate(format!(
                "|Z| = {:e} is below 1e-14; every phase gives the same squeezing",
                self.z.norm()
            ))
        })
    }
}

#[derive(Debug, Clone)]
struct CorrelatorTable {
    ds: f64,
    plus: Vec<Complex64>,
    minus: Vec<Complex64>,
    g: Option<Vec<f64>>,
    err: f64,
}

/// Four-point Lagrange interpolation on a uniform grid starting at zero;
/// zero past the end of the table.
fn interp<T>(vals: &[T], ds: f64, s: f64) -> T
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + Default,
{
    let n = vals.len();
    let x = s / ds;
    if n < 4 || x > (n - 1) as f64 {
        return T::default();
    }
    let i = (x.floor() as usize).clamp(1, n - 3) - 1;
    let t = x - i as f64;
    let (t0, t1, t2, t3) = (t, t - 1.0, t - 2.0, t - 3.0);
    let w0 = -t1 * t2 * t3 / 6.0;
    let w1 = t0 * t2 * t3 / 2.0;
    let w2 = -t0 * t1 * t3 / 2.0;
    let w3 = t0 * t1 * t2 / 6.0;
    vals[i] * w0 + vals[i + 1] * w1 + vals[i + 2] * w2 + vals[i + 3] * w3
}

/// Exact spectra for one configuration. Constants and correlator tables are
/// computed on construction and frozen.
#[derive(Debug, Clone)]
pub struct SpectraEngine {
    cfg: ModelConfig,
    kernels: KernelSet,
    quad: QuadConfig,
    dc: DynamicConstants,
    table: CorrelatorTable,
}

/// Divisor applied to the bound `min(1/(8ω_m), 1/(4γ_m))` on the
/// correlator grid spacing.
pub const DEFAULT_GRID_DIVISOR: f64 = 8.0;

impl SpectraEngine {
    pub fn new(cfg: &ModelConfig, quad: &QuadConfig) -> Result<SpectraEngine> {
        Self::with_grid_divisor(cfg, quad, DEFAULT_GRID_DIVISOR)
    }

    pub fn with_grid_divisor(cfg: &ModelConfig, quad: &QuadConfig, divisor: f64) -> Result<SpectraEngine> {
        cfg.validate()?;
        quad.validate()?;
        if !(divisor >= 1.0) {
            return Err(Error::Config(format!("grid divisor must be at least 1, got {divisor}")));
        }
        let mech = derive_mechanical(&cfg.mechanical)?;
        let kernels = KernelSet::new(mech, &cfg.noise, cfg.g_mode, *quad)?;
        let (m, err_m, theta, err_theta) = scattering_integrals(&kernels, cfg, quad)?;
        let k = kernels.scale() * (kernels.n_eff() + 0.5);
        let table = build_table(&kernels, cfg, quad, divisor)?;
        let mut engine = SpectraEngine {
            cfg: cfg.clone(),
            kernels,
            quad: *quad,
            dc: DynamicConstants {
                n_eff: 0.0,
                k,
                m,
                theta,
                alpha_phase: cfg.optical.psi - cfg.optical.phi - theta,
                z: Complex64::new(0.0, 0.0),
                err_m,
                err_theta,
                err_z: 0.0,
            },
            table,
        };
        engine.dc.n_eff = engine.kernels.n_eff();
        let z = engine.z_integral()?;
        engine.dc.z = z.value;
        engine.dc.err_z = z.err_estimate;
        Ok(engine)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn kernels(&self) -> &KernelSet {
        &self.kernels
    }

    pub fn constants(&self) -> &DynamicConstants {
        &self.dc
    }

    pub fn quad(&self) -> &QuadConfig {
        &self.quad
    }

    /// Spacing of the correlator table.
    pub fn table_spacing(&self) -> f64 {
        self.table.ds
    }

    /// Largest quadrature error estimate among the tabulated correlators.
    pub fn table_error(&self) -> f64 {
        self.table.err
    }

    pub fn mean_rates(&self) -> (f64, f64) {
        mean_rates(&self.cfg, &self.dc)
    }

    fn alpha(&self, psi: f64) -> f64 {
        self.dc.alpha_at(psi, self.cfg.optical.phi)
    }

    fn eta_lsq(&self) -> f64 {
        self.cfg.optical.eta * self.cfg.optical.lambda_sq
    }

    /// `4|λ|²η e^{−2(K+M)}`.
    fn minus_prefactor(&self) -> f64 {
        4.0 * self.eta_lsq() * (-2.0 * (self.dc.k + self.dc.m)).exp()
    }

    /// Tabulated `C±(s)`; `sign` is `+1` or `−1`.
    pub fn inner_correlator(&self, sign: i32, s: f64) -> Complex64 {
        let vals = if sign >= 0 { &self.table.plus } else { &self.table.minus };
        interp(vals, self.table.ds, s.abs())
    }

    /// `C±(s)` by direct adaptive quadrature, bypassing the table.
    pub fn inner_correlator_direct(&self, sign: i32, s: f64) -> Result<QuadResult<Complex64>> {
        let k = &self.kernels;
        let sg = if sign >= 0 { 2.0 } else { -2.0 };
        let w = k.mechanical().omega_damped;
        let q = inner_quad(k, &self.quad);
        integrate_semi_infinite(
            |u| cexpm1(Complex64::new(0.0, sg * k.h(u))) * cexpm1(Complex64::new(0.0, 2.0 * k.h(s + u))),
            k.mechanical().gamma,
            2.0 * w,
            &q,
        )
    }

    fn g_at(&self, s: f64) -> f64 {
        match &self.table.g {
            Some(g) => interp(g, self.table.ds, s),
            None => self.kernels.g(s).expect("closed-form g cannot fail"),
        }
    }

    /// `exp{η|λ|²C±(s) ∓ g(s) + ih(s)} − 1` with the sign pairing of the
    /// two reduced-spectrum components.
    fn bracket(&self, sign: i32, s: f64) -> Complex64 {
        let c = self.inner_correlator(sign, s) * self.eta_lsq();
        let g = if sign >= 0 { -self.g_at(s) } else { self.g_at(s) };
        cexpm1(c + Complex64::new(g, self.kernels.h(s)))
    }

    fn outer<F: Fn(f64) -> f64 + Sync>(&self, mu: f64, f: F) -> Result<QuadResult<f64>> {
        let m = self.kernels.mechanical();
        integrate_semi_infinite(
            |s| (mu * s).cos() * f(s),
            0.5 * m.gamma,
            mu.abs().max(m.omega_damped),
            &self.quad,
        )
    }

    fn z_integral(&self) -> Result<QuadResult<Complex64>> {
        let m = self.kernels.mechanical();
        let pre = self.minus_prefactor();
        integrate_semi_infinite(|s| -self.bracket(1, s) * pre, 0.5 * m.gamma, m.omega_damped, &self.quad)
    }

    /// `Σ₋⁰(μ)` and `Σ₋^ψ(μ)` separately.
    pub fn sigma_minus_components(&self, mu_grid: &[f64], psi: f64) -> Result<(SpectralCurve, SpectralCurve)> {
        check_grid(mu_grid)?;
        let pre = self.minus_prefactor();
        let rot = Complex64::cis(-2.0 * self.alpha(psi));
        let rows: Vec<(QuadResult<f64>, QuadResult<f64>)> = mu_grid
            .par_iter()
            .map(|&mu| {
                let a = self.outer(mu, |s| pre * self.bracket(-1, s).re)?;
                let b = self.outer(mu, |s| pre * (rot * self.bracket(1, s)).re)?;
                Ok((a, b))
            })
            .collect::<Result<_>>()?;
        let (r0, rp): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
        let table_err = self.table_err_bound();
        let curve = |label: &str, p: Option<f64>, r: Vec<QuadResult<f64>>| {
            SpectralCurve::new(
                label,
                p,
                Method::Exact,
                mu_grid.to_vec(),
                r.iter().map(|q| q.value).collect(),
                r.iter().map(|q| q.err_estimate + table_err).collect(),
            )
        };
        Ok((curve("sigma_minus_0", None, r0)?, curve("sigma_minus_psi", Some(psi), rp)?))
    }

    /// `Σ₋(μ) = Σ₋⁰(μ) + Σ₋^ψ(μ)`.
    pub fn sigma_minus(&self, mu_grid: &[f64], psi: f64) -> Result<SpectralCurve> {
        let (a, b) = self.sigma_minus_components(mu_grid, psi)?;
        SpectralCurve::new(
            "sigma_minus",
            Some(psi),
            Method::Exact,
            mu_grid.to_vec(),
            a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect(),
            a.err_estimates.iter().zip(&b.err_estimates).map(|(x, y)| x + y).collect(),
        )
    }

    pub fn sigma_zero(&self, mu_grid: &[f64], psi: f64) -> Result<SpectralCurve> {
        check_grid(mu_grid)?;
        let eta = self.cfg.optical.eta;
        let pre = 4.0 * self.dc.damping() * eta * eta.sqrt() * self.cfg.optical.lambda_sq;
        let rot = Complex64::cis(-self.alpha(psi));
        let k = &self.kernels;
        let rows: Vec<QuadResult<f64>> = mu_grid
            .par_iter()
            .map(|&mu| self.outer(mu, |s| pre * (rot * cexpm1(Complex64::new(0.0, 2.0 * k.h(s)))).re))
            .collect::<Result<_>>()?;
        SpectralCurve::new(
            "sigma_zero",
            Some(psi),
            Method::Exact,
            mu_grid.to_vec(),
            rows.iter().map(|q| q.value).collect(),
            rows.iter().map(|q| q.err_estimate).collect(),
        )
    }

    /// `Σ₊` vanishes identically.
    pub fn sigma_plus(&self, mu_grid: &[f64]) -> Result<SpectralCurve> {
        check_grid(mu_grid)?;
        let n = mu_grid.len();
        SpectralCurve::new("sigma_plus", None, Method::Exact, mu_grid.to_vec(), vec![0.0; n], vec![0.0; n])
    }

    /// `Z`, the phase of maximal squeezing at `μ = 0`, and the extreme values
    /// `Σ₋⁰(0) ∓ |Z|`.
    pub fn z_and_extremes(&self) -> Result<Extremes> {
        let (s0, _) = self.sigma_minus_components(&[0.0], self.cfg.optical.psi)?;
        let z = self.dc.z;
        let base = s0.values[0];
        let psi0 = if z.norm() < 1e-14 {
            None
        } else {
            let alpha0 = 0.5 * z.arg();
            Some((alpha0 + self.cfg.optical.phi + self.dc.theta).rem_euclid(TWO_PI))
        };
        Ok(Extremes {
            z,
            psi0,
            sigma_minus0_at_zero: base,
            sigma_min: base - z.norm(),
            sigma_max: base + z.norm(),
            err: s0.err_estimates[0] + self.dc.err_z,
        })
    }

    /// Intensity spectrum of one photocurrent at the configured phase.
    pub fn intensity_spectrum(
        &self,
        kind: CurrentKind,
        mu_grid: &[f64],
        det: &DetectorParams,
    ) -> Result<IntensitySpectrum> {
        check_grid(mu_grid)?;
        let psi = self.cfg.optical.psi;
        let parts = match kind {
            CurrentKind::Sum => None,
            CurrentKind::Diff => Some((self.sigma_minus(mu_grid, psi)?, None)),
            CurrentKind::Port1 | CurrentKind::Port2 => Some((
                self.sigma_minus(mu_grid, psi)?,
                Some(self.sigma_zero(mu_grid, psi)?),
            )),
        };
        let (n1, n2) = self.mean_rates();
        intensity_from_parts(
            kind,
            &IntensityInputs {
                lambda_sq: self.cfg.optical.lambda_sq,
                eta: self.cfg.optical.eta,
                chi: chi(&self.cfg.optical),
                damping: self.dc.damping(),
                alpha: self.dc.alpha_phase,
                n1,
                n2,
            },
            mu_grid,
            det,
            parts.as_ref().map(|(a, b)| (a, b.as_ref())),
            Method::Exact,
        )
    }
}

/// Scalars that enter the intensity-spectrum formulas.
#[derive(Debug, Clone, Copy)]
pub(crate) struct IntensityInputs {
    pub lambda_sq: f64,
    pub eta: f64,
    pub chi: f64,
    pub damping: f64,
    pub alpha: f64,
    pub n1: f64,
    pub n2: f64,
}

/// Assembles an intensity spectrum from reduced spectra; `None` stands for
/// vanishing reduced spectra.
pub(crate) fn intensity_from_parts(
    kind: CurrentKind,
    x: &IntensityInputs,
    mu_grid: &[f64],
    det: &DetectorParams,
    parts: Option<(&SpectralCurve, Option<&SpectralCurve>)>,
    method: Method,
) -> Result<IntensitySpectrum> {
    let n = mu_grid.len();
    let zeros = vec![0.0; n];
    let (sm, sm_err) = match parts {
        Some((c, _)) => (c.values.clone(), c.err_estimates.clone()),
        None => (zeros.clone(), zeros.clone()),
    };
    let (s0, s0_err) = match parts.and_then(|(_, z)| z) {
        Some(c) => (c.values.clone(), c.err_estimates.clone()),
        None => (zeros.clone(), zeros.clone()),
    };
    let l = x.lambda_sq;
    let one_m_eta = 1.0 - x.eta;
    let (delta, values, errs): (f64, Vec<f64>, Vec<f64>) = match kind {
        CurrentKind::Sum => (
            l * l,
            mu_grid.iter().map(|&mu| det.filter(mu) * l).collect(),
            zeros.clone(),
        ),
        CurrentKind::Diff => {
            let c = x.chi * x.damping * x.alpha.cos();
            (
                l * l * c * c,
                mu_grid
                    .iter()
                    .zip(&sm)
                    .map(|(&mu, s)| det.filter(mu) * l * (1.0 + one_m_eta * s))
                    .collect(),
                mu_grid
                    .iter()
                    .zip(&sm_err)
                    .map(|(&mu, e)| det.filter(mu) * l * one_m_eta * e)
                    .collect(),
            )
        }
        CurrentKind::Port1 | CurrentKind::Port2 => {
            let (sign, nj) = if kind == CurrentKind::Port1 { (-1.0, x.n1) } else { (1.0, x.n2) };
            let r = one_m_eta.sqrt();
            let mean_part = 4.0 * x.eta.sqrt() * x.damping * x.alpha.cos();
            (
                nj * nj,
                (0..n)
                    .map(|i| {
                        0.25 * det.filter(mu_grid[i])
                            * l
                            * (2.0 + sign * r * (mean_part + s0[i]) + one_m_eta * sm[i])
                    })
                    .collect(),
                (0..n)
                    .map(|i| 0.25 * det.filter(mu_grid[i]) * l * (r * s0_err[i] + one_m_eta * sm_err[i]))
                    .collect(),
            )
        }
    };
    Ok(IntensitySpectrum {
        kind,
        delta_weight: delta,
        smooth: SpectralCurve::new(
            format!("intensity_{}", kind.name()),
            None,
            method,
            mu_grid.to_vec(),
            values,
            errs,
        )?,
    })
}

fn inner_quad(k: &KernelSet, quad: &QuadConfig) -> QuadConfig {
    // C± is of order (2 v²Ω/2ω)²/γ; the absolute floor is applied relative to that scale
    let natural = 4.0 * k.scale() * k.scale() / k.mechanical().gamma;
    QuadConfig {
        abs_tol: quad.abs_tol * natural.max(f64::MIN_POSITIVE),
        ..*quad
    }
}

/// `M = η|λ|²∫₀^∞ [1 − cos 2h]` and `θ = η|λ|²∫₀^∞ sin 2h`, with errors.
fn scattering_integrals(k: &KernelSet, cfg: &ModelConfig, quad: &QuadConfig) -> Result<(f64, f64, f64, f64)> {
    let el = cfg.optical.eta * cfg.optical.lambda_sq;
    if k.scale() == 0.0 || el == 0.0 {
        return Ok((0.0, 0.0, 0.0, 0.0));
    }
    let m = k.mechanical();
    let mi = integrate_semi_infinite(
        |s| {
            let x = k.h(s).sin();
            2.0 * el * x * x
        },
        0.5 * m.gamma,
        m.omega_damped,
        quad,
    )?;
    let th = integrate_semi_infinite(|s| el * (2.0 * k.h(s)).sin(), 0.5 * m.gamma, m.omega_damped, quad)?;
    Ok((mi.value, mi.err_estimate, th.value, th.err_estimate))
}

fn build_table(k: &KernelSet, cfg: &ModelConfig, quad: &QuadConfig, divisor: f64) -> Result<CorrelatorTable> {
    let m = *k.mechanical();
    let ds = (1.0 / (8.0 * m.omega_damped)).min(1.0 / (4.0 * m.gamma)) / divisor;
    let s_end = quad.s_max(0.5 * m.gamma);
    let n = (s_end / ds).ceil() as usize + 1;
    let grid: Vec<f64> = (0..n).map(|i| i as f64 * ds).collect();

    let g = if cfg.noise.is_vacuum() || cfg.g_mode == crate::model::GMode::Flat {
        None
    } else {
        Some(grid.par_iter().map(|&s| k.g(s)).collect::<Result<Vec<f64>>>()?)
    };

    if k.scale() == 0.0 {
        let zero = vec![Complex64::new(0.0, 0.0); n];
        return Ok(CorrelatorTable {
            ds,
            plus: zero.clone(),
            minus: zero,
            g,
            err: 0.0,
        });
    }

    // All s share the u-abscissae, so the u-dependent factors are sampled once.
    let q = inner_quad(k, quad);
    let rule = FixedRule::new(0.0, q.s_max(m.gamma), std::f64::consts::FRAC_PI_4 / (2.0 * m.omega_damped));
    let nodes = rule.nodes();
    let a_plus: Vec<Complex64> = nodes.iter().map(|&u| expm1_i(2.0 * k.h(u))).collect();
    let a_minus: Vec<Complex64> = a_plus.iter().map(|z| z.conj()).collect();
    let env: Vec<(f64, f64)> = nodes
        .iter()
        .map(|&u| {
            let e = (-0.5 * m.gamma * u).exp();
            let (su, cu) = (m.omega_damped * u).sin_cos();
            (e * cu, e * su)
        })
        .collect();

    let rows: Vec<(Complex64, Complex64, f64)> = grid
        .par_iter()
        .map(|&s| {
            let es = k.scale() * (-0.5 * m.gamma * s).exp();
            let (ss, cs) = (m.omega_damped * s).sin_cos();
            let b: Vec<Complex64> = env
                .iter()
                .map(|&(ec, esn)| {
                    // h(s+u) = scale·e^{−γ(s+u)/2}·sin(ω(s+u))
                    let h = es * (ss * ec + cs * esn);
                    expm1_i(2.0 * h)
                })
                .collect();
            let fp: Vec<Complex64> = a_plus.iter().zip(&b).map(|(a, b)| a * b).collect();
            let fm: Vec<Complex64> = a_minus.iter().zip(&b).map(|(a, b)| a * b).collect();
            let (cp, ep) = rule.apply(&fp);
            let (cm, em) = rule.apply(&fm);
            let target = |v: Complex64| (q.rel_tol * v.norm()).max(q.abs_tol);
            let cp = if ep > target(cp) { adaptive_c(k, &q, 1, s)? } else { (cp, ep) };
            let cm = if em > target(cm) { adaptive_c(k, &q, -1, s)? } else { (cm, em) };
            Ok((cp.0, cm.0, cp.1.max(cm.1)))
        })
        .collect::<Result<_>>()?;

    let plus: Vec<Complex64> = rows.iter().map(|r| r.0).collect();
    let minus: Vec<Complex64> = rows.iter().map(|r| r.1).collect();
    // Cubic interpolation error at a cell midpoint is about (9/16)/24·|Δ⁴C|.
    let interp_err = |c: &[Complex64]| {
        c.windows(5)
            .map(|w| (w[0] - 4.0 * w[1] + 6.0 * w[2] - 4.0 * w[3] + w[4]).norm())
            .fold(0.0, f64::max)
            * (9.0 / 16.0 / 24.0)
    };
    let quad_err = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let err = quad_err + interp_err(&plus).max(interp_err(&minus));
    Ok(CorrelatorTable {
        ds,
        plus,
        minus,
        g,
        err,
    })
}

fn adaptive_c(k: &KernelSet, q: &QuadConfig, sign: i32, s: f64) -> Result<(Complex64, f64)> {
    let sg = if sign >= 0 { 2.0 } else { -2.0 };
    let m = k.mechanical();
    let r = integrate_semi_infinite(
        |u| cexpm1(Complex64::new(0.0, sg * k.h(u))) * cexpm1(Complex64::new(0.0, 2.0 * k.h(s + u))),
        m.gamma,
        2.0 * m.omega_damped,
        q,
    )?;
    Ok((r.value, r.err_estimate))
}

impl SpectraEngine {
    /// Bound on how much the tabulated correlator errors can move an outer
    /// integral: `4|λ|²η·η|λ|²·max err·s_max`, rescaled by the envelope.
    fn table_err_bound(&self) -> f64 {
        let m = self.kernels.mechanical();
        self.minus_prefactor() * self.eta_lsq() * self.table.err * 2.0 / m.gamma
    }
}

//! Independent numerical oracles for the analytic moments.
//!
//! * A Monte Carlo of the thermal Weyl moment `⟨W₃(ℓ_t)⟩`, drawing the bath as
//!   a stationary complex Gaussian process by spectral synthesis.
//! * A collision model of the oscillator in a truncated Fock space: at each
//!   step the mirror meets a fresh photon ancilla (coherent) and a fresh
//!   phonon ancilla (vacuum), both traced out immediately.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelSet, NoiseSpectrum};
use crate::model::{derive_mechanical, ModelConfig};
use crate::oscillator::CouplingCoefficients;
use crate::rng;

type CMat = DMatrix<Complex64>;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Frequency cells `(ν_k, N(ν_k)Δν/2π)` covering the support of `N`, with
/// spacing at most `dnu`. Cells where `N` vanishes are dropped.
fn spectral_cells(noise: &NoiseSpectrum, dnu: f64) -> Result<Vec<(f64, f64)>> {
    if !(dnu > 0.0) || !dnu.is_finite() {
        return Err(Error::Config(format!("frequency spacing must be positive, got {dnu}")));
    }
    let Some((lo, hi)) = noise.support() else {
        return Ok(Vec::new());
    };
    let n = ((hi - lo) / dnu).ceil().max(1.0) as usize;
    let d = (hi - lo) / n as f64;
    Ok((0..n)
        .map(|k| lo + (k as f64 + 0.5) * d)
        .map(|nu| (nu, noise.eval(nu) * d / TWO_PI))
        .filter(|&(_, w)| w > 0.0)
        .collect())
}

fn complex_normal<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// One realisation of the bath process on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpTrajectory {
    pub t: Vec<f64>,
    pub u: Vec<Complex64>,
    pub seed: u64,
    pub dnu: f64,
    pub noise: NoiseSpectrum,
}

/// Draws `u(t) = Σ_k w_k e^{−iν_k t}` with independent circular Gaussian
/// weights of variance `N(ν_k)Δν/2π`, so that `E[ū(t)u(s)] ≈ F(t−s)` and
/// `E[u(t)u(s)] = 0`.
pub fn sample_gp(noise: &NoiseSpectrum, t_grid: &[f64], seed: u64, dnu: f64) -> Result<GpTrajectory> {
    noise.validate()?;
    if let [a, b, ..] = t_grid {
        let dt = b - a;
        let uniform = t_grid.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs().max(1.0));
        if !(dt > 0.0) || !uniform {
            return Err(Error::Config("time grid must be uniform and increasing".into()));
        }
    }
    let cells = spectral_cells(noise, dnu)?;
    let mut r = rng::stream(seed, 0);
    let weights: Vec<(f64, Complex64)> = cells
        .iter()
        .map(|&(nu, var)| (nu, complex_normal(&mut r) * var.sqrt()))
        .collect();
    let u = t_grid
        .iter()
        .map(|&t| weights.iter().map(|&(nu, w)| w * Complex64::cis(-nu * t)).sum())
        .collect();
    Ok(GpTrajectory {
        t: t_grid.to_vec(),
        u,
        seed,
        dnu,
        noise: noise.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylMcEstimate {
    pub t: f64,
    pub n_samples: usize,
    pub estimate: Complex64,
    pub stderr: f64,
    /// Exact Gaussian average for the same frequency cells and time grid.
    pub discretized_mean: f64,
    /// `e^{−K}`, the long-time limit.
    pub target: f64,
}

impl WeylMcEstimate {
    /// Distance to `e^{−K}` in units of the standard error.
    pub fn z_score(&self) -> f64 {
        (self.estimate - self.target).norm() / self.stderr.max(f64::MIN_POSITIVE)
    }
}

/// Monte Carlo of `⟨W₃(ℓ_t)⟩ = E[exp{⟨u|ℓ_t⟩ − ⟨ℓ_t|u⟩ − ½‖ℓ_t‖²}]` with
/// `ℓ_t(r) = l(t−r)` on `(0, t)` and `u` drawn as in [`sample_gp`].
///
/// The time integrals use the trapezoidal rule. Since `u` is a finite sum of
/// exponentials, `⟨u|ℓ_t⟩ = Σ_k w̄_k L_k` with `L_k` precomputed once.
pub fn thermal_weyl_mc(kernels: &KernelSet, t: f64, n_samples: usize, seed: u64, dnu: f64) -> Result<WeylMcEstimate> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Config(format!("time must be positive, got {t}")));
    }
    if n_samples < 2 {
        return Err(Error::Config("at least two samples are needed".into()));
    }
    let cells = spectral_cells(kernels.noise(), dnu)?;
    let w = kernels.mechanical().omega_damped;
    let nu_max = cells.iter().map(|c| c.0.abs()).fold(0.0, f64::max);
    let h_target = (std::f64::consts::PI / (8.0 * (nu_max + w))).min(0.05);
    let nt = (t / h_target).ceil() as usize + 1;
    let h = t / (nt - 1) as f64;
    let trap = |j: usize| if j == 0 || j + 1 == nt { 0.5 * h } else { h };
    let ell: Vec<Complex64> = (0..nt).map(|j| kernels.l(t - j as f64 * h) * trap(j)).collect();
    let norm_sq: f64 = (0..nt).map(|j| kernels.l(t - j as f64 * h).norm_sqr() * trap(j)).sum();

    // L_k = ∫ e^{iν_k r} ℓ_t(r) dr, by rotating a phasor along the grid
    let coeffs: Vec<(f64, Complex64)> = cells
        .par_iter()
        .map(|&(nu, var)| {
            let step = Complex64::cis(nu * h);
            let mut ph = Complex64::new(1.0, 0.0);
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, e) in ell.iter().enumerate() {
                if j % 256 == 0 {
                    ph = Complex64::cis(nu * j as f64 * h);
                }
                acc += ph * e;
                ph *= step;
            }
            (var.sqrt(), acc)
        })
        .collect();
    let variance: f64 = coeffs.iter().map(|(s, l)| s * s * l.norm_sqr()).sum();
    let damp = (-0.5 * norm_sq).exp();

    let samples: Vec<Complex64> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let x: Complex64 = coeffs.iter().map(|&(s, l)| (complex_normal(&mut r) * s).conj() * l).sum();
            // ⟨u|ℓ⟩ − ⟨ℓ|u⟩ = 2i·Im⟨u|ℓ⟩
            Complex64::cis(2.0 * x.im) * damp
        })
        .collect();
    let n = n_samples as f64;
    let mean: Complex64 = samples.iter().sum::<Complex64>() / n;
    let var: f64 = samples.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / (n - 1.0);
    Ok(WeylMcEstimate {
        t,
        n_samples,
        estimate: mean,
        stderr: (var / n).sqrt(),
        discretized_mean: (-variance).exp() * damp,
        target: (-kernels.scale() * (kernels.n_eff() + 0.5)).exp(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollisionConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Oscillator Fock truncation.
    pub dim_sys: usize,
    /// Photon-number truncation of each photon ancilla.
    pub dim_field: usize,
    /// Truncation of each phonon ancilla.
    pub dim_th: usize,
    /// 1 (Lie) or 2 (Strang).
    pub trotter_order: u8,
    pub q0: f64,
    pub p0: f64,
    /// Record observables every this many steps.
    pub record_every: usize,
}

impl Default for CollisionConfig {
    fn default() -> Self {
        CollisionConfig {
            dt: 0.01,
            t_end: 50.0,
            dim_sys: 25,
            dim_field: 8,
            dim_th: 2,
            trotter_order: 2,
            q0: 0.0,
            p0: 0.0,
            record_every: 10,
        }
    }
}

/// Largest Poisson mass that may fall outside the photon truncation.
pub const PHOTON_TAIL_TOL: f64 = 1e-8;
/// Largest population allowed in the top oscillator Fock level.
pub const FOCK_TAIL_TOL: f64 = 1e-6;

impl CollisionConfig {
    pub fn validate(&self, omega_bare: f64) -> Result<()> {
        if !(self.dt > 0.0) || self.dt * omega_bare > 0.05 {
            return Err(Error::Config(format!("collision step must satisfy 0 < dt·Ω ≤ 0.05, got {}", self.dt * omega_bare)));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.dim_sys < 8 || self.dim_field < 3 || self.dim_th < 2 {
            return Err(Error::Config(format!(
                "truncations too small: dim_sys={} (≥8), dim_field={} (≥3), dim_th={} (≥2)",
                self.dim_sys, self.dim_field, self.dim_th
            )));
        }
        if !matches!(self.trotter_order, 1 | 2) {
            return Err(Error::Config(format!("trotter_order must be 1 or 2, got {}", self.trotter_order)));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        if !self.q0.is_finite() || !self.p0.is_finite() {
            return Err(Error::Config("initial mean must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionTrace {
    pub t: Vec<f64>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub q2: Vec<f64>,
    pub p2: Vec<f64>,
    /// `⟨e^{ivq}⟩`.
    pub weyl: Vec<Complex64>,
    /// Largest `|tr ρ − 1|` over all steps.
    pub max_trace_error: f64,
    /// Smallest eigenvalue of `ρ` over all steps.
    pub min_eigenvalue: f64,
    /// Largest population of the top Fock level over all steps.
    pub max_tail_population: f64,
}

impl CollisionTrace {
    pub fn last(&self) -> (f64, f64, f64, f64, Complex64) {
        let i = self.t.len() - 1;
        (self.q[i], self.p[i], self.q2[i], self.p2[i], self.weyl[i])
    }
}

fn ladder(d: usize) -> CMat {
    let mut a = CMat::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// `exp(−iHτ)` for Hermitian `H`, through its eigendecomposition.
fn unitary_from_hermitian(h: &CMat, tau: f64) -> CMat {
    let eig = SymmetricEigen::new(h.clone());
    let u = &eig.eigenvectors;
    let phases = CMat::from_diagonal(&eig.eigenvalues.map(|e| Complex64::cis(-e * tau)));
    u * phases * u.adjoint()
}

/// Kraus operators of `exp(√τ(R⊗b† − R†⊗b))` with the ancilla `b` starting
/// in vacuum and truncated to `dim_th` levels.
fn damping_kraus(r: &CMat, tau: f64, dim_th: usize) -> Vec<CMat> {
    let d = r.nrows();
    let n = d * dim_th;
    let rd = r.adjoint();
    let mut gen = CMat::zeros(n, n);
    for k in 0..dim_th - 1 {
        let s = ((k + 1) as f64).sqrt() * tau.sqrt();
        for i in 0..d {
            for j in 0..d {
                gen[(i * dim_th + k + 1, j * dim_th + k)] += r[(i, j)] * s;
                gen[(i * dim_th + k, j * dim_th + k + 1)] -= rd[(i, j)] * s;
            }
        }
    }
    let u = gen.exp();
    (0..dim_th)
        .map(|k| CMat::from_fn(d, d, |i, j| u[(i * dim_th + k, j * dim_th)]))
        .collect()
}

fn apply_kraus(rho: &CMat, ks: &[CMat]) -> CMat {
    let mut out = CMat::zeros(rho.nrows(), rho.ncols());
    for k in ks {
        out += k * rho * k.adjoint();
    }
    out
}

/// Integrates the reduced oscillator dynamics by repeated interactions and
/// records `⟨q⟩, ⟨p⟩, ⟨q²⟩, ⟨p²⟩, ⟨e^{ivq}⟩`.
///
/// The oscillator Hamiltonian is `Ω(q²+p²)/2 + (γ/4){q,p}` and the phonon
/// coupling is `R = α_R q + β_R p` with the equipartition coefficients.
/// Each photon ancilla holds a coherent state of mean photon number
/// `η|λ|²dt`; a photon kicks the mirror by `e^{ivq}`.
pub fn collision_run(cfg: &ModelConfig, ccfg: &CollisionConfig) -> Result<CollisionTrace> {
    cfg.validate()?;
    let mech = derive_mechanical(&cfg.mechanical)?;
    ccfg.validate(mech.omega_bare)?;
    if !cfg.noise.is_vacuum() {
        return Err(Error::Config("the collision oracle supports only a vacuum bath".into()));
    }
    let d = ccfg.dim_sys;
    let (o, g, v) = (mech.omega_bare, mech.gamma, mech.v);
    let dt = ccfg.dt;

    let a = ladder(d);
    let ad = a.adjoint();
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let q = (&a + &ad) * Complex64::new(s2, 0.0);
    let p = (&a - &ad) * Complex64::new(0.0, -s2);
    let q2 = &q * &q;
    let p2 = &p * &p;
    let h = (&q2 + &p2) * Complex64::new(0.5 * o, 0.0) + (&q * &p + &p * &q) * Complex64::new(0.25 * g, 0.0);
    let coef = CouplingCoefficients::equipartition(&mech);
    let r = &q * Complex64::new(coef.alpha_r, 0.0) + &p * coef.beta_r;

    // Photon kicks act diagonally in the eigenbasis of the truncated q.
    let qe = SymmetricEigen::new(q.map(|z| z.re));
    let basis = qe.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let xs = qe.eigenvalues;
    let mean_photons = cfg.optical.eta * cfg.optical.lambda_sq * dt;
    let mut pm: Vec<f64> = Vec::with_capacity(ccfg.dim_field);
    let mut term = (-mean_photons).exp();
    for m in 0..ccfg.dim_field {
        pm.push(term);
        term *= mean_photons / (m + 1) as f64;
    }
    let kept: f64 = pm.iter().sum();
    if 1.0 - kept > PHOTON_TAIL_TOL {
        return Err(Error::Config(format!(
            "dim_field={} leaves Poisson mass {:e} > {PHOTON_TAIL_TOL:e} untreated",
            ccfg.dim_field,
            1.0 - kept
        )));
    }
    pm.iter_mut().for_each(|w| *w /= kept);
    let kick = CMat::from_fn(d, d, |i, j| {
        pm.iter()
            .enumerate()
            .map(|(m, w)| Complex64::cis(v * m as f64 * (xs[i] - xs[j])) * *w)
            .sum()
    });
    let weyl_diag: Vec<Complex64> = xs.iter().map(|&x| Complex64::cis(v * x)).collect();

    let tau_a = if ccfg.trotter_order == 2 { 0.5 * dt } else { dt };
    let ua = unitary_from_hermitian(&h, tau_a);
    let kb = damping_kraus(&r, tau_a, ccfg.dim_th);
    // Lie: A, B, C. Strang: A/2, B/2, C, B/2, A/2.
    let pre: Vec<CMat> = kb.iter().map(|k| k * &ua).collect();
    let post: Vec<CMat> = kb.iter().map(|k| &ua * k).collect();

    // displaced ground state
    let alpha = Complex64::new(ccfg.q0, ccfg.p0) * s2;
    let mut psi = nalgebra::DVector::<Complex64>::zeros(d);
    let mut c = (-0.5 * alpha.norm_sqr()).exp();
    let mut amp = Complex64::new(c, 0.0);
    for n in 0..d {
        psi[n] = amp;
        c = 1.0 / ((n + 1) as f64).sqrt();
        amp *= alpha * c;
    }
    let nrm = psi.norm();
    psi /= Complex64::new(nrm, 0.0);
    let mut rho = &psi * psi.adjoint();

    let steps = (ccfg.t_end / dt).round() as usize;
    let mut tr = CollisionTrace {
        t: Vec::new(),
        q: Vec::new(),
        p: Vec::new(),
        q2: Vec::new(),
        p2: Vec::new(),
        weyl: Vec::new(),
        max_trace_error: 0.0,
        min_eigenvalue: f64::INFINITY,
        max_tail_population: 0.0,
    };
    let expect = |rho: &CMat, op: &CMat| (rho * op).trace().re;
    let record = |rho: &CMat, t: f64, tr: &mut CollisionTrace| {
        let rq = basis.adjoint() * rho * &basis;
        tr.t.push(t);
        tr.q.push(expect(rho, &q));
        tr.p.push(expect(rho, &p));
        tr.q2.push(expect(rho, &q2));
        tr.p2.push(expect(rho, &p2));
        tr.weyl.push((0..d).map(|i| rq[(i, i)] * weyl_diag[i]).sum());
    };
    record(&rho, 0.0, &mut tr);
    for step in 1..=steps {
        rho = apply_kraus(&rho, &pre);
        let mut rq = basis.adjoint() * &rho * &basis;
        rq.component_mul_assign(&kick);
        rho = &basis * rq * basis.adjoint();
        if ccfg.trotter_order == 2 {
            rho = apply_kraus(&rho, &post);
        }
        // restore exact hermiticity lost to rounding
        rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);

        tr.max_trace_error = tr.max_trace_error.max((rho.trace().re - 1.0).abs());
        let tail = rho[(d - 1, d - 1)].re;
        tr.max_tail_population = tr.max_tail_population.max(tail);
        if tail > FOCK_TAIL_TOL {
            return Err(Error::Truncation(format!(
                "top Fock level holds population {tail:e} at t={:.4}; raise dim_sys",
                step as f64 * dt
            )));
        }
        let min_eig = rho.symmetric_eigenvalues().min();
        tr.min_eigenvalue = tr.min_eigenvalue.min(min_eig);
        if step % ccfg.record_every == 0 || step == steps {
            record(&rho, step as f64 * dt, &mut tr);
        }
    }
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GMode;
    use crate::oscillator::mean_exact;
    use crate::quadrature::QuadConfig;

    fn kernels(v: f64, noise: NoiseSpectrum) -> KernelSet {
        let mut c = ModelConfig::reference();
        c.mechanical.v = v;
        KernelSet::new(derive_mechanical(&c.mechanical).unwrap(), &noise, GMode::Quadrature, QuadConfig::default())
            .unwrap()
    }

    #[test]
    fn vacuum_gp_is_zero() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let tr = sample_gp(&NoiseSpectrum::Vacuum, &t, 3, 0.01).unwrap();
        assert!(tr.u.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn gp_second_moments() {
        let noise = NoiseSpectrum::Constant { n0: 1.0, cutoff: 5.0 };
        let t = [0.0, 0.7, 1.4];
        let n = 3000;
        let draws: Vec<GpTrajectory> = (0..n).map(|s| sample_gp(&noise, &t, s, 0.05).unwrap()).collect();
        let f0 = 10.0 / TWO_PI;
        let mean_sq = |i: usize, j: usize| draws.iter().map(|d| d.u[i].conj() * d.u[j]).sum::<Complex64>() / n as f64;
        let pseudo = |i: usize, j: usize| draws.iter().map(|d| d.u[i] * d.u[j]).sum::<Complex64>() / n as f64;
        let se = f0 / (n as f64).sqrt();
        assert!((mean_sq(0, 0).re - f0).abs() < 3.0 * se);
        assert!(pseudo(0, 1).norm() < 3.0 * se);
        // stationarity: the same lag at two origins
        let fk = kernels(0.1, noise.clone()).autocov_f(-0.7).unwrap();
        assert!((mean_sq(0, 1) - fk).norm() < 4.0 * se);
        assert!((mean_sq(1, 2) - fk).norm() < 4.0 * se);
    }

    #[test]
    fn gp_is_reproducible() {
        let noise = NoiseSpectrum::Constant { n0: 2.0, cutoff: 1.0 };
        let t = [0.0, 0.5];
        assert_eq!(sample_gp(&noise, &t, 9, 0.1).unwrap(), sample_gp(&noise, &t, 9, 0.1).unwrap());
        assert!(sample_gp(&noise, &[0.0, 1.0, 1.5], 9, 0.1).is_err());
    }

    #[test]
    fn mc_without_kick_is_one() {
        let k = kernels(0.0, NoiseSpectrum::Constant { n0: 1.0, cutoff: 20.0 });
        let r = thermal_weyl_mc(&k, 5.0, 100, 1, 0.05).unwrap();
        assert_eq!(r.estimate, Complex64::new(1.0, 0.0));
        assert_eq!(r.stderr, 0.0);
    }

    #[test]
    fn mc_vacuum_is_deterministic() {
        let k = kernels(0.1, NoiseSpectrum::Vacuum);
        let t = 10.0 / k.mechanical().gamma;
        let r = thermal_weyl_mc(&k, t, 10, 1, 0.01).unwrap();
        let w = k.mechanical().omega_damped;
        assert!((r.estimate.re - (-0.01 / (4.0 * w)).exp()).abs() < 1e-3);
        assert!(r.estimate.im.abs() < 1e-15);
        assert!((r.estimate.re - (-0.5 * k.ell_norm_sq(t)).exp()).abs() < 1e-7);
    }

    #[test]
    fn mc_thermal_small() {
        let k = kernels(1.0, NoiseSpectrum::Constant { n0: 1.0, cutoff: 4.0 });
        let t = 6.0 / k.mechanical().gamma;
        let r = thermal_weyl_mc(&k, t, 2000, 5, 0.02).unwrap();
        assert!((r.estimate - r.discretized_mean).norm() < 4.0 * r.stderr);
        assert!((r.discretized_mean - r.target).abs() < 0.01 * r.target);
    }

    fn oracle_cfg() -> ModelConfig {
        let mut c = ModelConfig::reference();
        c.optical.lambda_sq = 40.0;
        c
    }

    #[test]
    fn collision_free_decay_follows_mean_equations() {
        let mut c = ModelConfig::reference();
        c.mechanical.v = 0.0;
        c.optical.lambda_sq = 0.0;
        let cc = CollisionConfig {
            t_end: 8.0,
            dim_sys: 16,
            q0: 1.0,
            p0: 0.5,
            record_every: 100,
            ..CollisionConfig::default()
        };
        let tr = collision_run(&c, &cc).unwrap();
        let mech = derive_mechanical(&c.mechanical).unwrap();
        for (i, &t) in tr.t.iter().enumerate() {
            let (qe, pe) = mean_exact(&c, &mech, 1.0, 0.5, t);
            assert!((tr.q[i] - qe).abs() < 2e-4, "t={t}: {} vs {qe}", tr.q[i]);
            assert!((tr.p[i] - pe).abs() < 2e-4);
        }
        assert!(tr.max_trace_error < 1e-10);
        assert!(tr.min_eigenvalue > -1e-10);
    }

    #[test]
    fn collision_truncation_guard() {
        let cc = CollisionConfig {
            t_end: 0.2,
            dim_sys: 8,
            q0: 4.0,
            ..CollisionConfig::default()
        };
        assert!(matches!(collision_run(&oracle_cfg(), &cc), Err(Error::Truncation(_))));
    }

    #[test]
    fn collision_config_checks() {
        let c = oracle_cfg();
        let bad = [
            CollisionConfig { dt: 0.1, ..CollisionConfig::default() },
            CollisionConfig { dim_sys: 4, ..CollisionConfig::default() },
            CollisionConfig { trotter_order: 3, ..CollisionConfig::default() },
        ];
        let mut big = c.clone();
        big.optical.lambda_sq = 1e4;
        assert!(collision_run(&big, &CollisionConfig { dim_field: 3, ..CollisionConfig::default() }).is_err());
        for b in &bad {
            assert!(matches!(collision_run(&c, b), Err(Error::Config(_))));
        }
        let mut thermal = c;
        thermal.noise = NoiseSpectrum::Constant { n0: 1.0, cutoff: 2.0 };
        assert!(collision_run(&thermal, &CollisionConfig::default()).is_err());
    }

    #[test]
    fn strang_and_lie_agree_to_first_order() {
        let cc = CollisionConfig {
            t_end: 5.0,
            dim_sys: 12,
            record_every: 500,
            ..CollisionConfig::default()
        };
        let a = collision_run(&oracle_cfg(), &cc).unwrap();
        let b = collision_run(&oracle_cfg(), &CollisionConfig { trotter_order: 1, ..cc }).unwrap();
        let (qa, ..) = a.last();
        let (qb, ..) = b.last();
        assert!((qa - qb).abs() < 0.02 * qa.abs().max(0.1));
    }
}

//! Direct-detection statistics: Mandel parameters and asymptotic count
//! (co)variances, the fixed-mirror baseline, and a Poisson Monte Carlo of
//! that baseline.
//!
//! No simulation of the oscillating-mirror counting process is attempted:
//! only its first and second moments are known in closed form.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{chi, DetectorParams, ModelConfig};
use crate::rng;
use crate::spectra_exact::{
    check_grid, intensity_from_parts, rates_from_contrast, CurrentKind, DynamicConstants, IntensityInputs,
    IntensitySpectrum, Method,
};

/// Mandel parameter of one port; undefined when the port is dark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum MandelQ {
    Value(f64),
    DarkPort,
}

impl MandelQ {
    pub fn value(self) -> Result<f64> {
        match self {
            MandelQ::Value(q) => Ok(q),
            MandelQ::DarkPort => Err(Error::Degenerate(
                "Mandel parameter is undefined at a port with zero mean rate".into(),
            )),
        }
    }
}

/// Where the reduced spectra at `μ = 0` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaSource {
    Exact,
    Approx,
    FixedMirror,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountingStats {
    pub n1: f64,
    pub n2: f64,
    pub q1: MandelQ,
    pub q2: MandelQ,
    pub q_plus: f64,
    pub q_minus: f64,
    /// `lim Cov[N₁(T), N₂(T)]/T`.
    pub cov_rate: f64,
    pub var_plus_rate: f64,
    pub var_minus_rate: f64,
    pub source: SigmaSource,
}

impl CountingStats {
    pub fn q(&self, port: usize) -> Result<f64> {
        match port {
            1 => self.q1.value(),
            2 => self.q2.value(),
            _ => Err(Error::Config(format!("no output port {port}"))),
        }
    }
}

/// Relative rate below which a port counts as dark.
const DARK_PORT_REL: f64 = 1e-12;

/// Counting statistics from the mean rates and the reduced spectra at zero
/// frequency.
pub fn counting_stats(
    lambda_sq: f64,
    eta: f64,
    (n1, n2): (f64, f64),
    sigma_minus_0: f64,
    sigma_zero_0: f64,
    source: SigmaSource,
) -> CountingStats {
    let one_m_eta = 1.0 - eta;
    // Q₋ and the variance of the difference share this single expression
    let q_minus = one_m_eta * sigma_minus_0;
    let root = one_m_eta.max(0.0).sqrt();
    let q = |sign: f64, nj: f64| {
        if nj <= DARK_PORT_REL * lambda_sq || nj <= 0.0 {
            MandelQ::DarkPort
        } else {
            MandelQ::Value(lambda_sq / (4.0 * nj) * (sign * root * sigma_zero_0 + q_minus))
        }
    };
    CountingStats {
        n1,
        n2,
        q1: q(-1.0, n1),
        q2: q(1.0, n2),
        q_plus: 0.0,
        q_minus,
        cov_rate: -0.25 * lambda_sq * q_minus,
        var_plus_rate: lambda_sq,
        var_minus_rate: lambda_sq * (1.0 + q_minus),
        source,
    }
}

/// [`counting_stats`] with the mean rates of a computed configuration.
pub fn counting_stats_for(
    cfg: &ModelConfig,
    dc: &DynamicConstants,
    sigma_minus_0: f64,
    sigma_zero_0: f64,
    source: SigmaSource,
) -> CountingStats {
    counting_stats(
        cfg.optical.lambda_sq,
        cfg.optical.eta,
        crate::spectra_exact::mean_rates(cfg, dc),
        sigma_minus_0,
        sigma_zero_0,
        source,
    )
}

/// Statistics of the interferometer with both mirrors fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub n1: f64,
    pub n2: f64,
    pub stats: CountingStats,
    pub spectra: Vec<IntensitySpectrum>,
}

pub fn baseline_rates(cfg: &ModelConfig) -> (f64, f64) {
    rates_from_contrast(
        cfg.optical.lambda_sq,
        chi(&cfg.optical) * (cfg.optical.phi - cfg.optical.psi).cos(),
    )
}

/// Rates, vanishing reduced spectra, Poisson counting statistics and the
/// four intensity spectra of the fixed-mirror interferometer.
pub fn baseline_fixed_mirror(cfg: &ModelConfig, mu_grid: &[f64], det: &DetectorParams) -> Result<Baseline> {
    check_grid(mu_grid)?;
    det.validate()?;
    let (n1, n2) = baseline_rates(cfg);
    let stats = counting_stats(cfg.optical.lambda_sq, cfg.optical.eta, (n1, n2), 0.0, 0.0, SigmaSource::FixedMirror);
    let inputs = IntensityInputs {
        lambda_sq: cfg.optical.lambda_sq,
        eta: cfg.optical.eta,
        chi: chi(&cfg.optical),
        damping: 1.0,
        alpha: cfg.optical.psi - cfg.optical.phi,
        n1,
        n2,
    };
    let spectra = CurrentKind::ALL
        .iter()
        .map(|&k| intensity_from_parts(k, &inputs, mu_grid, det, None, Method::Exact))
        .collect::<Result<Vec<_>>>()?;
    Ok(Baseline { n1, n2, stats, spectra })
}

/// Window statistics of one simulated port.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalPort {
    pub total_counts: u64,
    pub rate: f64,
    pub rate_stderr: f64,
    pub window_mean: f64,
    pub window_var: f64,
    /// `(s² − m)/m`, or `None` when no counts were seen.
    pub q: Option<f64>,
    pub q_stderr: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCounts {
    pub horizon: f64,
    pub windows: usize,
    pub seed: u64,
    pub port1: EmpiricalPort,
    pub port2: EmpiricalPort,
    /// Window covariance of the two ports divided by the window length.
    pub cov_rate: f64,
}

/// Arrival times of a Poisson process binned into `windows` equal windows.
fn poisson_windows<R: Rng>(rate: f64, horizon: f64, windows: usize, rng: &mut R) -> Vec<u64> {
    let mut bins = vec![0u64; windows];
    if rate <= 0.0 {
        return bins;
    }
    let exp = Exp::new(rate).expect("positive rate");
    let width = horizon / windows as f64;
    let mut t = exp.sample(rng);
    while t < horizon {
        let k = ((t / width) as usize).min(windows - 1);
        bins[k] += 1;
        t += exp.sample(rng);
    }
    bins
}

fn summarize(bins: &[u64], horizon: f64) -> EmpiricalPort {
    let w = bins.len() as f64;
    let width = horizon / w;
    let total: u64 = bins.iter().sum();
    let m = total as f64 / w;
    let var = bins.iter().map(|&b| (b as f64 - m).powi(2)).sum::<f64>() / (w - 1.0);
    let m4 = bins.iter().map(|&b| (b as f64 - m).powi(4)).sum::<f64>() / w;
    let (q, q_stderr) = if total == 0 {
        (None, None)
    } else {
        // delta method on s²/m − 1 with independent windows
        let var_s2 = ((m4 - var * var) / w).max(0.0);
        let var_m = var / w;
        let se = (var_s2 / (m * m) + var * var * var_m / m.powi(4)).sqrt();
        (Some((var - m) / m), Some(se))
    };
    EmpiricalPort {
        total_counts: total,
        rate: total as f64 / horizon,
        rate_stderr: (var / w).sqrt() / width,
        window_mean: m,
        window_var: var,
        q,
        q_stderr,
    }
}

/// Simulates the two independent Poisson counting processes of the
/// fixed-mirror interferometer over `horizon`, binned into `windows`
/// windows.
pub fn simulate_baseline_counts(cfg: &ModelConfig, horizon: f64, windows: usize, seed: u64) -> Result<EmpiricalCounts> {
    if !(horizon > 0.0 && horizon.is_finite()) || windows < 2 {
        return Err(Error::Config(format!(
            "need a positive horizon and at least two windows, got {horizon}, {windows}"
        )));
    }
    let (n1, n2) = baseline_rates(cfg);
    let b1 = poisson_windows(n1, horizon, windows, &mut rng::stream(seed, 1));
    let b2 = poisson_windows(n2, horizon, windows, &mut rng::stream(seed, 2));
    let p1 = summarize(&b1, horizon);
    let p2 = summarize(&b2, horizon);
    let cov = b1
        .iter()
        .zip(&b2)
        .map(|(&a, &b)| (a as f64 - p1.window_mean) * (b as f64 - p2.window_mean))
        .sum::<f64>()
        / (windows as f64 - 1.0);
    Ok(EmpiricalCounts {
        horizon,
        windows,
        seed,
        port1: p1,
        port2: p2,
        cov_rate: cov / (horizon / windows as f64),
    })
}

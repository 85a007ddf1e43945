//! Generalized Weyl operators `W(g; V)` acting on coherent amplitudes, and the
//! fixed-mirror interferometer built from them.
//!
//! Displacements are sampled on a uniform time grid and inner products use
//! the trapezoidal rule. Mixing matrices are constant in time.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ModelConfig;

type Mat = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n: usize) -> Result<TimeGrid> {
        if !(dt > 0.0) || n < 2 || !t0.is_finite() {
            return Err(Error::Config(format!("invalid time grid t0={t0} dt={dt} n={n}")));
        }
        Ok(TimeGrid { t0, dt, n })
    }

    /// 2048 samples spanning one detector time constant `1/κ`.
    pub fn detector_window(kappa: f64) -> Result<TimeGrid> {
        TimeGrid::new(0.0, 1.0 / (kappa * 2047.0), 2048)
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t0 + self.dt * i as f64
    }

    fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.n {
            0.5 * self.dt
        } else {
            self.dt
        }
    }
}

/// Per-channel complex amplitudes on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentAmplitude {
    pub grid: TimeGrid,
    /// `channels[k][i]` is channel `k` at time `grid.t(i)`.
    pub channels: Vec<Vec<Complex64>>,
}

impl CoherentAmplitude {
    pub fn new(grid: TimeGrid, channels: Vec<Vec<Complex64>>) -> Result<CoherentAmplitude> {
        if channels.iter().any(|ch| ch.len() != grid.n) {
            return Err(Error::GridMismatch("channel length differs from the grid size".into()));
        }
        if channels.iter().flatten().any(|z| !z.is_finite()) {
            return Err(Error::Config("amplitude samples must be finite".into()));
        }
        Ok(CoherentAmplitude { grid, channels })
    }

    pub fn zeros(grid: TimeGrid, d: usize) -> CoherentAmplitude {
        CoherentAmplitude {
            grid,
            channels: vec![vec![c(0.0, 0.0); grid.n]; d],
        }
    }

    pub fn from_fn<F: Fn(usize, f64) -> Complex64>(grid: TimeGrid, d: usize, f: F) -> CoherentAmplitude {
        CoherentAmplitude {
            grid,
            channels: (0..d).map(|k| (0..grid.n).map(|i| f(k, grid.t(i))).collect()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.channels.len()
    }

    /// `⟨self|other⟩`, antilinear in the first argument.
    pub fn inner(&self, other: &CoherentAmplitude) -> Result<Complex64> {
        self.check(other)?;
        let mut acc = c(0.0, 0.0);
        for (a, b) in self.channels.iter().zip(&other.channels) {
            for i in 0..self.grid.n {
                acc += a[i].conj() * b[i] * self.grid.weight(i);
            }
        }
        Ok(acc)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.inner(self).map(|z| z.re).unwrap_or(0.0)
    }

    /// Pointwise `Σ_k |f_k(t)|²`.
    pub fn intensity(&self, channel: usize) -> Vec<f64> {
        self.channels[channel].iter().map(|z| z.norm_sqr()).collect()
    }

    fn check(&self, other: &CoherentAmplitude) -> Result<()> {
        if self.grid != other.grid || self.dim() != other.dim() {
            return Err(Error::GridMismatch(format!(
                "grids {:?}/{} and {:?}/{} differ",
                self.grid,
                self.dim(),
                other.grid,
                other.dim()
            )));
        }
        Ok(())
    }

    fn mixed(&self, m: &Mat) -> CoherentAmplitude {
        let d = self.dim();
        let mut out = CoherentAmplitude::zeros(self.grid, d);
        for i in 0..self.grid.n {
            for r in 0..d {
                let mut acc = c(0.0, 0.0);
                for k in 0..d {
                    acc += m[(r, k)] * self.channels[k][i];
                }
                out.channels[r][i] = acc;
            }
        }
        out
    }

    fn plus(&self, other: &CoherentAmplitude) -> CoherentAmplitude {
        let mut out = self.clone();
        for (a, b) in out.channels.iter_mut().zip(&other.channels) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        out
    }

    fn scaled(&self, s: f64) -> CoherentAmplitude {
        let mut out = self.clone();
        out.channels.iter_mut().flatten().for_each(|z| *z *= s);
        out
    }
}

/// `phase · W(displacement; mixing)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylElement {
    pub phase: Complex64,
    pub displacement: CoherentAmplitude,
    pub mixing: Mat,
}

fn unitarity_defect(m: &Mat) -> f64 {
    let d = m.nrows();
    (m.adjoint() * m - Mat::identity(d, d)).norm()
}

impl WeylElement {
    pub fn new(phase: Complex64, displacement: CoherentAmplitude, mixing: Mat) -> Result<WeylElement> {
        let d = displacement.dim();
        if mixing.nrows() != d || mixing.ncols() != d {
            return Err(Error::GridMismatch(format!(
                "{}x{} mixing matrix for {d} channels",
                mixing.nrows(),
                mixing.ncols()
            )));
        }
        if (phase.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("global phase must have unit modulus, got {}", phase.norm())));
        }
        if unitarity_defect(&mixing) > 1e-12 {
            return Err(Error::Config("mixing matrix is not unitary".into()));
        }
        Ok(WeylElement {
            phase,
            displacement,
            mixing,
        })
    }

    pub fn identity(grid: TimeGrid, d: usize) -> WeylElement {
        Self::pure_mixing(grid, Mat::identity(d, d))
    }

    /// Pure displacement `W(g; 1)`.
    pub fn displacement(g: CoherentAmplitude) -> WeylElement {
        let d = g.dim();
        WeylElement {
            phase: c(1.0, 0.0),
            displacement: g,
            mixing: Mat::identity(d, d),
        }
    }

    fn pure_mixing(grid: TimeGrid, m: Mat) -> WeylElement {
        let d = m.nrows();
        WeylElement {
            phase: c(1.0, 0.0),
            displacement: CoherentAmplitude::zeros(grid, d),
            mixing: m,
        }
    }

    /// `‖V†V − 1‖` of the mixing matrix.
    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.mixing)
    }

    /// `W(h;U)·W(g;V) = e^{−i Im⟨h|Ug⟩} W(h + Ug; UV)`, with `self = W(h;U)`.
    pub fn compose(&self, other: &WeylElement) -> Result<WeylElement> {
        let ug = other.displacement.mixed(&self.mixing);
        let im = self.displacement.inner(&ug)?.im;
        Ok(WeylElement {
            phase: self.phase * other.phase * Complex64::cis(-im),
            displacement: self.displacement.plus(&ug),
            mixing: &self.mixing * &other.mixing,
        })
    }

    pub fn inverse(&self) -> WeylElement {
        let vdag = self.mixing.adjoint();
        WeylElement {
            phase: self.phase.conj(),
            displacement: self.displacement.mixed(&vdag).scaled(-1.0),
            mixing: vdag,
        }
    }

    /// Action on a normalized coherent state: returns the acquired phase
    /// `phase·e^{i Im⟨Vf|g⟩}` and the new amplitude `Vf + g`.
    pub fn apply_to_coherent(&self, f: &CoherentAmplitude) -> Result<(Complex64, CoherentAmplitude)> {
        let vf = f.mixed(&self.mixing);
        let im = vf.inner(&self.displacement)?.im;
        Ok((self.phase * Complex64::cis(im), vf.plus(&self.displacement)))
    }
}

/// Two-channel beam splitter of transmittance `eta`.
pub fn beam_splitter_matrix(eta: f64) -> Result<Mat> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Config(format!("transmittance must lie in [0,1], got {eta}")));
    }
    let t = eta.sqrt();
    let r = (1.0 - eta).sqrt();
    Ok(Mat::from_row_slice(2, 2, &[c(t, 0.0), c(0.0, r), c(0.0, r), c(t, 0.0)]))
}

pub fn beam_splitter(grid: TimeGrid, eta: f64) -> Result<WeylElement> {
    Ok(WeylElement::pure_mixing(grid, beam_splitter_matrix(eta)?))
}

/// Multiplies channel `channel` (0-based) of a `d`-channel amplitude by
/// `e^{iψ}`.
pub fn phase_shifter(grid: TimeGrid, d: usize, channel: usize, psi: f64) -> Result<WeylElement> {
    if channel >= d {
        return Err(Error::Config(format!("channel {channel} out of range for {d} channels")));
    }
    let mut m = Mat::identity(d, d);
    m[(channel, channel)] = Complex64::cis(psi);
    Ok(WeylElement::pure_mixing(grid, m))
}

/// Amplitudes at the three wire stages of the fixed-mirror interferometer.
#[derive(Debug, Clone, PartialEq)]
pub struct MziAmplitudes {
    /// After the first beam splitter.
    pub b: CoherentAmplitude,
    /// After the mirror phase `φ` (channel 1) and the shifter `ψ` (channel 2).
    pub c: CoherentAmplitude,
    /// Output ports.
    pub d: CoherentAmplitude,
}

/// Laser in channel 1 and vacuum in channel 2: `(√|λ|² e^{−iω₀t}, 0)`.
pub fn laser_input(cfg: &ModelConfig, grid: TimeGrid, omega0: f64) -> CoherentAmplitude {
    let amp = cfg.optical.lambda_sq.sqrt();
    CoherentAmplitude::from_fn(grid, 2, |k, t| if k == 0 { Complex64::cis(-omega0 * t) * amp } else { c(0.0, 0.0) })
}

/// Propagates `f_in` through BS1 (`η`), the two arm phases and a balanced BS2.
pub fn evaluate_mzi_fixed(cfg: &ModelConfig, f_in: &CoherentAmplitude) -> Result<MziAmplitudes> {
    if f_in.dim() != 2 {
        return Err(Error::GridMismatch(format!("interferometer needs 2 channels, got {}", f_in.dim())));
    }
    let grid = f_in.grid;
    let bs1 = beam_splitter(grid, cfg.optical.eta)?;
    let arms = phase_shifter(grid, 2, 0, cfg.optical.phi)?.compose(&phase_shifter(grid, 2, 1, cfg.optical.psi)?)?;
    let bs2 = beam_splitter(grid, 0.5)?;
    let (_, b) = bs1.apply_to_coherent(f_in)?;
    let (_, cc) = arms.apply_to_coherent(&b)?;
    let (_, d) = bs2.apply_to_coherent(&cc)?;
    Ok(MziAmplitudes { b, c: cc, d })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn grid() -> TimeGrid {
        TimeGrid::new(0.0, 0.01, 200).unwrap()
    }

    fn random_unitary<R: Rng>(rng: &mut R, d: usize) -> Mat {
        let m = Mat::from_fn(d, d, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        m.qr().q()
    }

    fn random_element<R: Rng>(rng: &mut R, d: usize) -> WeylElement {
        let a: Vec<(f64, f64, f64)> = (0..d).map(|_| (rng.random::<f64>(), rng.random::<f64>() * 5.0, rng.random::<f64>())).collect();
        let g = CoherentAmplitude::from_fn(grid(), d, |k, t| {
            let (amp, w, ph) = a[k];
            Complex64::cis(w * t + ph) * amp
        });
        WeylElement::new(Complex64::cis(rng.random::<f64>() * 6.0), g, random_unitary(rng, d)).unwrap()
    }

    fn close(a: &WeylElement, b: &WeylElement, tol: f64) -> bool {
        (a.phase - b.phase).norm() < tol
            && (&a.mixing - &b.mixing).norm() < tol
            && a.displacement
                .channels
                .iter()
                .flatten()
                .zip(b.displacement.channels.iter().flatten())
                .all(|(x, y)| (x - y).norm() < tol)
    }

    #[test]
    fn zero_displacements_compose_to_product() {
        let mut rng = crate::rng::stream(1, 0);
        let u = random_unitary(&mut rng, 2);
        let v = random_unitary(&mut rng, 2);
        let wu = WeylElement::pure_mixing(grid(), u.clone());
        let wv = WeylElement::pure_mixing(grid(), v.clone());
        let p = wv.compose(&wu).unwrap();
        assert_eq!(p.phase, c(1.0, 0.0));
        assert!((&p.mixing - &v * &u).norm() < 1e-15);
    }

    #[test]
    fn displacement_and_its_negative() {
        let g = CoherentAmplitude::from_fn(grid(), 2, |k, t| c(t, k as f64 - t * t));
        let w = WeylElement::displacement(g.clone()).compose(&WeylElement::displacement(g.scaled(-1.0))).unwrap();
        assert!(close(&w, &WeylElement::identity(grid(), 2), 1e-15));
    }

    #[test]
    fn group_laws() {
        let mut rng = crate::rng::stream(2, 0);
        for _ in 0..5 {
            let a = random_element(&mut rng, 3);
            let b = random_element(&mut rng, 3);
            let cc = random_element(&mut rng, 3);
            let left = a.compose(&b).unwrap().compose(&cc).unwrap();
            let right = a.compose(&b.compose(&cc).unwrap()).unwrap();
            assert!(close(&left, &right, 1e-10));
            let id = a.compose(&a.inverse()).unwrap();
            assert!(close(&id, &WeylElement::identity(grid(), 3), 1e-10));
            assert!(left.unitarity_defect() < 1e-12);
        }
    }

    #[test]
    fn homomorphism_on_coherent_states() {
        let mut rng = crate::rng::stream(3, 0);
        let a = random_element(&mut rng, 2);
        let b = random_element(&mut rng, 2);
        let f = CoherentAmplitude::from_fn(grid(), 2, |k, t| c((k as f64 + 1.0) * t.cos(), t.sin()));
        let (p_ab, f_ab) = a.compose(&b).unwrap().apply_to_coherent(&f).unwrap();
        let (p_b, f_b) = b.apply_to_coherent(&f).unwrap();
        let (p_a, f_seq) = a.apply_to_coherent(&f_b).unwrap();
        assert!((p_ab - p_a * p_b).norm() < 1e-10);
        for (x, y) in f_ab.channels.iter().flatten().zip(f_seq.channels.iter().flatten()) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn elementary_actions() {
        let f = CoherentAmplitude::from_fn(grid(), 2, |k, t| if k == 0 { Complex64::cis(t) } else { c(0.0, 0.0) });
        let (p, g) = WeylElement::identity(grid(), 2).apply_to_coherent(&f).unwrap();
        assert_eq!(p, c(1.0, 0.0));
        assert_eq!(g, f);
        let h = CoherentAmplitude::from_fn(grid(), 2, |_, t| c(t, 1.0));
        let (_, g) = phase_shifter(grid(), 2, 1, 0.7).unwrap().apply_to_coherent(&h).unwrap();
        for i in 0..grid().n {
            assert!((g.channels[1][i] - h.channels[1][i] * Complex64::cis(0.7)).norm() < 1e-15);
            assert_eq!(g.channels[0][i], h.channels[0][i]);
        }
        let eta: f64 = 0.3;
        let (_, g) = beam_splitter(grid(), eta).unwrap().apply_to_coherent(&f).unwrap();
        for i in 0..grid().n {
            assert!((g.channels[0][i] - f.channels[0][i] * eta.sqrt()).norm() < 1e-15);
            assert!((g.channels[1][i] - f.channels[0][i] * c(0.0, (1.0 - eta).sqrt())).norm() < 1e-15);
        }
    }

    #[test]
    fn beam_splitter_matrices() {
        let m = beam_splitter_matrix(1.0).unwrap();
        assert_eq!(m, Mat::identity(2, 2));
        let m = beam_splitter_matrix(0.5).unwrap();
        assert!(m.iter().all(|z| (z.norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-16));
        for eta in [0.0, 0.1, 0.5, 0.77] {
            assert!(unitarity_defect(&beam_splitter_matrix(eta).unwrap()) < 1e-15);
        }
        assert!(beam_splitter_matrix(1.2).is_err());
    }

    #[test]
    fn grid_mismatch() {
        let a = CoherentAmplitude::zeros(grid(), 2);
        let b = CoherentAmplitude::zeros(TimeGrid::new(0.0, 0.02, 200).unwrap(), 2);
        assert!(matches!(a.inner(&b), Err(Error::GridMismatch(_))));
        let w = WeylElement::identity(grid(), 2);
        assert!(matches!(w.apply_to_coherent(&b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn balanced_dark_port() {
        let mut cfg = ModelConfig::reference();
        cfg.optical.eta = 0.5;
        cfg.optical.phi = 1.1;
        cfg.optical.psi = 1.1;
        let g = TimeGrid::detector_window(cfg.detector.kappa).unwrap();
        let out = evaluate_mzi_fixed(&cfg, &laser_input(&cfg, g, 3.0)).unwrap();
        assert!(out.d.intensity(0).iter().all(|&x| x < 1e-24 * cfg.optical.lambda_sq));
        cfg.optical.psi = 1.1 - std::f64::consts::FRAC_PI_2;
        let out = evaluate_mzi_fixed(&cfg, &laser_input(&cfg, g, 3.0)).unwrap();
        for (a, b) in out.d.intensity(0).iter().zip(out.d.intensity(1)) {
            assert!((a - 500.0).abs() < 1e-10 && (b - 500.0).abs() < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn ports_reproduce_baseline_rates(eta in 0.01f64..0.99, phi in 0.0f64..6.28, psi in 0.0f64..6.28, l in 0.0f64..1e3) {
            let mut cfg = ModelConfig::reference();
            cfg.optical.eta = eta;
            cfg.optical.phi = phi;
            cfg.optical.psi = psi;
            cfg.optical.lambda_sq = l;
            let g = TimeGrid::new(0.0, 0.05, 16).unwrap();
            let out = evaluate_mzi_fixed(&cfg, &laser_input(&cfg, g, 1.7)).unwrap();
            let (n1, n2) = crate::counting::baseline_rates(&cfg);
            for i in 0..g.n {
                let (i1, i2) = (out.d.intensity(0)[i], out.d.intensity(1)[i]);
                prop_assert!((i1 - n1).abs() <= 1e-12 * (1.0 + l));
                prop_assert!((i2 - n2).abs() <= 1e-12 * (1.0 + l));
                prop_assert!((i1 + i2 - l).abs() <= 1e-12 * (1.0 + l));
            }
            prop_assert!((out.b.norm_sqr() - out.d.norm_sqr()).abs() <= 1e-12 * (1.0 + out.b.norm_sqr()));
        }
    }
}

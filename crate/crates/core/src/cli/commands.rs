//! One function per subcommand, each producing a [`Table`].

use std::f64::consts::FRAC_PI_2;

use crate::counting::{baseline_fixed_mirror, counting_stats_for, simulate_baseline_counts, CountingStats, MandelQ, SigmaSource};
use crate::error::Result;
use crate::kernels::KernelSet;
use crate::model::derive_mechanical;
use crate::oracles::{collision_run, thermal_weyl_mc};
use crate::oscillator::{equilibrium_moments, q_infinity};
use crate::spectra_approx::{ApproxModel, RegimeThresholds};
use crate::spectra_exact::{CurrentKind, SpectraEngine};

use super::config::RunConfig;
use super::output::{Cell, Table};

const FREQ: &str = "omega_bare";
const TIME: &str = "1/omega_bare";
const RATE: &str = "photons*omega_bare";

fn header(cmd: &str, rc: &RunConfig) -> Result<Table> {
    let mut t = Table::new(cmd);
    t.meta("config_sha256", rc.hash());
    t.meta("schema_version", rc.schema_version);
    t.meta("units", "frequencies in omega_bare, times in 1/omega_bare, rates in photons per 1/omega_bare");
    let report = ApproxModel::new(&rc.model)?.regime_check(RegimeThresholds::default());
    t.meta("regime", serde_json::to_string(&report).expect("report serializes"));
    Ok(t)
}

fn engine(rc: &RunConfig) -> Result<SpectraEngine> {
    SpectraEngine::new(&rc.model, &rc.quad)
}

fn kv_table(cmd: &str, rc: &RunConfig, rows: &[(&str, f64, f64, &str)]) -> Result<Table> {
    let mut t = header(cmd, rc)?;
    t.column("quantity", "").column("value", "").column("err_estimate", "").column("unit", "");
    for &(name, v, e, u) in rows {
        t.push_row(vec![name.into(), v.into(), e.into(), u.into()]);
    }
    Ok(t)
}

pub fn derive(rc: &RunConfig) -> Result<Table> {
    let e = engine(rc)?;
    let m = *e.kernels().mechanical();
    let dc = *e.constants();
    let x = e.z_and_extremes()?;
    let (n1, n2) = e.mean_rates();
    let eq = equilibrium_moments(&rc.model, &m, dc.n_eff);
    let psi0 = x.psi0.unwrap_or(f64::NAN);
    let rows = [
        ("omega_damped", m.omega_damped, 0.0, FREQ),
        ("tau_re", m.tau.re, 0.0, ""),
        ("tau_im", m.tau.im, 0.0, ""),
        ("kick_scale", e.kernels().scale(), 0.0, ""),
        ("n_at_omega", e.kernels().n_at_omega(), 0.0, ""),
        ("n_eff", dc.n_eff, 0.0, ""),
        ("k", dc.k, 0.0, ""),
        ("m", dc.m, dc.err_m, ""),
        ("theta", dc.theta, dc.err_theta, "rad"),
        ("alpha", dc.alpha_phase, dc.err_theta, "rad"),
        ("damping", dc.damping(), dc.damping() * dc.err_m, ""),
        ("z_re", dc.z.re, dc.err_z, ""),
        ("z_im", dc.z.im, dc.err_z, ""),
        ("z_abs", dc.z.norm(), dc.err_z, ""),
        ("psi0", psi0, 0.0, "rad"),
        ("sigma_minus0_at_zero", x.sigma_minus0_at_zero, x.err, ""),
        ("sigma_minus_min_at_zero", x.sigma_min, x.err, ""),
        ("sigma_minus_max_at_zero", x.sigma_max, x.err, ""),
        ("n1", n1, 0.0, RATE),
        ("n2", n2, 0.0, RATE),
        ("q_infinity", q_infinity(&rc.model), 0.0, ""),
        ("q_var", eq.q_var, 0.0, ""),
        ("p_var", eq.p_var, 0.0, ""),
        ("qp_anticomm", eq.qp_anticomm, 0.0, ""),
        ("table_spacing", e.table_spacing(), 0.0, TIME),
        ("table_error", e.table_error(), 0.0, ""),
    ];
    kv_table("derive", rc, &rows)
}

pub fn spectra_exact(rc: &RunConfig) -> Result<Table> {
    let e = engine(rc)?;
    let grid = rc.grid.points();
    let psi = rc.model.optical.psi;
    let (s0, sp) = e.sigma_minus_components(&grid, psi)?;
    let sz = e.sigma_zero(&grid, psi)?;
    let splus = e.sigma_plus(&grid)?;
    let mut t = header("spectra-exact", rc)?;
    t.meta_num("psi", psi);
    t.meta_num("k", e.constants().k);
    t.meta_num("m", e.constants().m);
    t.meta_num("theta", e.constants().theta);
    t.meta_num("table_error", e.table_error());
    t.column("mu", FREQ)
        .column("sigma_minus", "")
        .column("sigma_minus_err", "")
        .column("sigma_minus_0", "")
        .column("sigma_minus_psi", "")
        .column("sigma_zero", "")
        .column("sigma_zero_err", "")
        .column("sigma_plus", "");
    for i in 0..grid.len() {
        t.push_row(vec![
            grid[i].into(),
            (s0.values[i] + sp.values[i]).into(),
            (s0.err_estimates[i] + sp.err_estimates[i]).into(),
            s0.values[i].into(),
            sp.values[i].into(),
            sz.values[i].into(),
            sz.err_estimates[i].into(),
            splus.values[i].into(),
        ]);
    }
    Ok(t)
}

pub fn spectra_approx(rc: &RunConfig) -> Result<Table> {
    let am = ApproxModel::new(&rc.model)?;
    let grid = rc.grid.points();
    let psi = rc.model.optical.psi;
    let (psi0, min0) = am.psi0();
    let a = am.alpha(psi);
    let (a0, a1) = (am.alpha(psi0), am.alpha(psi0 + FRAC_PI_2));
    let mut t = header("spectra-approx", rc)?;
    t.meta_num("psi", psi);
    t.meta_num("psi0", psi0);
    t.meta_num("sigma_minus_min_at_zero", min0);
    t.meta_num("theta_first_order", am.theta);
    t.column("mu", FREQ)
        .column("sigma_minus", "")
        .column("sigma_zero", "")
        .column("sigma_minus_psi0", "")
        .column("sigma_minus_psi1", "")
        .column("delta2_minus", "")
        .column("delta2_plus", "");
    for &mu in &grid {
        let (lo, hi) = am.delta2_at(mu);
        t.push_row(vec![
            mu.into(),
            am.sigma_minus_at(mu, a).into(),
            am.sigma_zero_at(mu, a).into(),
            am.sigma_minus_at(mu, a0).into(),
            am.sigma_minus_at(mu, a1).into(),
            lo.into(),
            hi.into(),
        ]);
    }
    Ok(t)
}

pub fn intensity(rc: &RunConfig) -> Result<Table> {
    let e = engine(rc)?;
    let grid = rc.grid.points();
    let spectra = CurrentKind::ALL
        .iter()
        .map(|&k| e.intensity_spectrum(k, &grid, &rc.model.detector))
        .collect::<Result<Vec<_>>>()?;
    let mut t = header("intensity", rc)?;
    let (n1, n2) = e.mean_rates();
    t.meta_num("n1", n1);
    t.meta_num("n2", n2);
    t.column("mu", FREQ);
    for s in &spectra {
        let n = s.kind.name();
        t.column(&format!("{n}_smooth"), "c^2*photons*omega_bare")
            .column(&format!("{n}_smooth_err"), "c^2*photons*omega_bare")
            .column(&format!("{n}_delta_weight"), "c^2*photons^2*omega_bare^2");
    }
    for i in 0..grid.len() {
        let mut row: Vec<Cell> = vec![grid[i].into()];
        for s in &spectra {
            row.push(s.smooth.values[i].into());
            row.push(s.smooth.err_estimates[i].into());
            row.push(s.delta_weight.into());
        }
        t.push_row(row);
    }
    Ok(t)
}

fn q_cell(q: MandelQ) -> Cell {
    match q {
        MandelQ::Value(v) => v.into(),
        MandelQ::DarkPort => "dark_port".into(),
    }
}

fn stats_columns(t: &mut Table) {
    t.column("source", "")
        .column("n1", RATE)
        .column("n2", RATE)
        .column("q1", "")
        .column("q2", "")
        .column("q_plus", "")
        .column("q_minus", "")
        .column("cov_rate", RATE)
        .column("var_plus_rate", RATE)
        .column("var_minus_rate", RATE)
        .column("sigma_err", "");
}

fn stats_row(name: &str, s: &CountingStats, err: f64) -> Vec<Cell> {
    vec![
        name.into(),
        s.n1.into(),
        s.n2.into(),
        q_cell(s.q1),
        q_cell(s.q2),
        s.q_plus.into(),
        s.q_minus.into(),
        s.cov_rate.into(),
        s.var_plus_rate.into(),
        s.var_minus_rate.into(),
        err.into(),
    ]
}

pub fn counting(rc: &RunConfig) -> Result<Table> {
    let e = engine(rc)?;
    let psi = rc.model.optical.psi;
    let sm = e.sigma_minus(&[0.0], psi)?;
    let sz = e.sigma_zero(&[0.0], psi)?;
    let dc = *e.constants();
    let exact = counting_stats_for(&rc.model, &dc, sm.values[0], sz.values[0], SigmaSource::Exact);
    let am = ApproxModel::new(&rc.model)?.with_theta(dc.theta).with_n_eff(dc.n_eff);
    let a = am.alpha(psi);
    let approx = counting_stats_for(&rc.model, &dc, am.sigma_minus_at(0.0, a), am.sigma_zero_at(0.0, a), SigmaSource::Approx);
    let mut t = header("counting", rc)?;
    stats_columns(&mut t);
    t.push_row(stats_row("exact", &exact, sm.err_estimates[0] + sz.err_estimates[0]));
    t.push_row(stats_row("approx", &approx, 0.0));
    Ok(t)
}

pub fn baseline(rc: &RunConfig) -> Result<Table> {
    let grid = rc.grid.points();
    let b = baseline_fixed_mirror(&rc.model, &grid, &rc.model.detector)?;
    let emp = simulate_baseline_counts(&rc.model, rc.mc.horizon, rc.mc.windows, rc.mc.seed)?;
    let mut t = header("baseline", rc)?;
    t.meta("seed", rc.mc.seed);
    t.meta_num("horizon", rc.mc.horizon);
    t.meta("windows", rc.mc.windows);
    stats_columns(&mut t);
    t.push_row(stats_row("fixed_mirror", &b.stats, 0.0));
    let opt = |x: Option<f64>| x.map(Cell::Num).unwrap_or_else(|| "dark_port".into());
    let mut rows = Vec::new();
    for (name, p) in [("port1", &emp.port1), ("port2", &emp.port2)] {
        rows.push(vec![
            name.into(),
            (p.total_counts as f64).into(),
            p.rate.into(),
            p.rate_stderr.into(),
            opt(p.q),
            opt(p.q_stderr),
        ]);
    }
    // the simulated record goes into metadata so the CSV keeps one layout
    for (i, r) in rows.iter().enumerate() {
        let cells: Vec<String> = r
            .iter()
            .map(|c| match c {
                Cell::Num(x) => format!("{x:.14e}"),
                Cell::Text(s) => s.clone(),
            })
            .collect();
        t.meta(&format!("empirical_port{}", i + 1), format!("counts,rate,rate_stderr,q_hat,q_hat_stderr = {}", cells[1..].join(",")));
    }
    t.meta_num("empirical_cov_rate", emp.cov_rate);
    Ok(t)
}

pub fn oracle_thermal(rc: &RunConfig) -> Result<Table> {
    let mech = derive_mechanical(&rc.model.mechanical)?;
    let k = KernelSet::new(mech, &rc.model.noise, rc.model.g_mode, rc.quad)?;
    let time = rc.mc.t_gamma / mech.gamma;
    let r = thermal_weyl_mc(&k, time, rc.mc.n_samples, rc.mc.seed, rc.mc.dnu)?;
    let mut t = header("oracle-thermal", rc)?;
    t.meta("seed", rc.mc.seed);
    t.meta_num("dnu", rc.mc.dnu);
    t.column("t", TIME)
        .column("n_samples", "")
        .column("estimate_re", "")
        .column("estimate_im", "")
        .column("stderr", "")
        .column("discretized_mean", "")
        .column("target_exp_minus_k", "")
        .column("z_score", "");
    t.push_row(vec![
        r.t.into(),
        (r.n_samples as f64).into(),
        r.estimate.re.into(),
        r.estimate.im.into(),
        r.stderr.into(),
        r.discretized_mean.into(),
        r.target.into(),
        r.z_score().into(),
    ]);
    Ok(t)
}

pub fn oracle_collision(rc: &RunConfig) -> Result<Table> {
    let tr = collision_run(&rc.model, &rc.collision)?;
    let e = engine(rc)?;
    let mech = derive_mechanical(&rc.model.mechanical)?;
    let eq = equilibrium_moments(&rc.model, &mech, 0.0);
    let mut t = header("oracle-collision", rc)?;
    t.meta_num("q_infinity", q_infinity(&rc.model));
    t.meta_num("p_var_equilibrium", eq.p_var);
    t.meta_num("q_var_equilibrium", eq.q_var);
    t.meta_num("weyl_modulus_target", e.constants().damping());
    t.meta_num("max_trace_error", tr.max_trace_error);
    t.meta_num("min_eigenvalue", tr.min_eigenvalue);
    t.meta_num("max_tail_population", tr.max_tail_population);
    t.column("t", TIME)
        .column("q", "")
        .column("p", "")
        .column("q2", "")
        .column("p2", "")
        .column("weyl_re", "")
        .column("weyl_im", "")
        .column("weyl_abs", "");
    for i in 0..tr.t.len() {
        t.push_row(vec![
            tr.t[i].into(),
            tr.q[i].into(),
            tr.p[i].into(),
            tr.q2[i].into(),
            tr.p2[i].into(),
            tr.weyl[i].re.into(),
            tr.weyl[i].im.into(),
            tr.weyl[i].norm().into(),
        ]);
    }
    Ok(t)
}

/// Data of the squeezing figures: `Σ₋(μ)` at the two extremal phases and the
/// quadrature-variance bounds `Δ²±(μ)`, with the exact spectra alongside.
pub fn figures(rc: &RunConfig) -> Result<Table> {
    let am = ApproxModel::new(&rc.model)?;
    let grid = rc.grid.points();
    let (psi0, min0) = am.psi0();
    let (a0, a1) = (am.alpha(psi0), am.alpha(psi0 + FRAC_PI_2));
    let e = engine(rc)?;
    let x = e.z_and_extremes()?;
    let epsi0 = x.psi0()?;
    let ex0 = e.sigma_minus(&grid, epsi0)?;
    let ex1 = e.sigma_minus(&grid, epsi0 + FRAC_PI_2)?;
    let mut t = header("figures", rc)?;
    t.meta_num("psi0_approx", psi0);
    t.meta_num("psi0_exact", epsi0);
    t.meta_num("sigma_minus_psi0_at_zero_approx", min0);
    t.meta_num("sigma_minus_psi0_at_zero_exact", x.sigma_min);
    t.meta_num("sigma_minus_psi0_at_zero_exact_err", x.err);
    t.column("mu", FREQ)
        .column("sigma_minus_psi0_approx", "")
        .column("sigma_minus_psi1_approx", "")
        .column("delta2_minus", "")
        .column("delta2_plus", "")
        .column("sigma_minus_psi0_exact", "")
        .column("sigma_minus_psi0_exact_err", "")
        .column("sigma_minus_psi1_exact", "")
        .column("sigma_minus_psi1_exact_err", "");
    for (i, &mu) in grid.iter().enumerate() {
        let (lo, hi) = am.delta2_at(mu);
        t.push_row(vec![
            mu.into(),
            am.sigma_minus_at(mu, a0).into(),
            am.sigma_minus_at(mu, a1).into(),
            lo.into(),
            hi.into(),
            ex0.values[i].into(),
            ex0.err_estimates[i].into(),
            ex1.values[i].into(),
            ex1.err_estimates[i].into(),
        ]);
    }
    Ok(t)
}

//! Command-line front end: configuration ingestion, dispatch and emission.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::Error;
use config::{Format, RunConfig};
use output::Table;

#[derive(Debug, Parser)]
#[command(name = "mzi-squeeze", version, about = "Detection statistics of an interferometer with an oscillating mirror")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dotted-path override, e.g. `--set model.optical.eta=0.2`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Also write SVG line plots next to the output.
    #[arg(long, global = true)]
    pub svg: bool,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Derived constants, dynamic constants and rates.
    Derive,
    /// Exact reduced spectra on the frequency grid.
    SpectraExact,
    /// Weak-interaction reduced spectra and quadrature bounds.
    SpectraApprox,
    /// Intensity spectra of the four photocurrents.
    Intensity,
    /// Mandel parameters and asymptotic count variances.
    Counting,
    /// Fixed-mirror statistics and a Poisson count simulation.
    Baseline,
    /// Monte Carlo of the thermal Weyl moment.
    OracleThermal,
    /// Collision-model run of the oscillator in a vacuum bath.
    OracleCollision,
    /// Data of the squeezing and quadrature-variance figures.
    Figures,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Derive => "derive",
            Command::SpectraExact => "spectra-exact",
            Command::SpectraApprox => "spectra-approx",
            Command::Intensity => "intensity",
            Command::Counting => "counting",
            Command::Baseline => "baseline",
            Command::OracleThermal => "oracle-thermal",
            Command::OracleCollision => "oracle-collision",
            Command::Figures => "figures",
        }
    }
}

/// Exit status for a library error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Convergence { .. } => 3,
        Error::Regime(_) => 4,
        _ => 1,
    }
}

pub fn resolve_config(cli: &Cli) -> crate::Result<RunConfig> {
    let mut rc = RunConfig::load(cli.config.as_deref(), &cli.overrides)?;
    if let Some(f) = cli.format {
        rc.output.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    if let Some(s) = cli.seed {
        rc.mc.seed = s;
    }
    if let Some(p) = &cli.out {
        rc.output.path = Some(p.display().to_string());
    }
    Ok(rc)
}

pub fn run_command(cmd: Command, rc: &RunConfig) -> crate::Result<Table> {
    match cmd {
        Command::Derive => commands::derive(rc),
        Command::SpectraExact => commands::spectra_exact(rc),
        Command::SpectraApprox => commands::spectra_approx(rc),
        Command::Intensity => commands::intensity(rc),
        Command::Counting => commands::counting(rc),
        Command::Baseline => commands::baseline(rc),
        Command::OracleThermal => commands::oracle_thermal(rc),
        Command::OracleCollision => commands::oracle_collision(rc),
        Command::Figures => commands::figures(rc),
    }
}

/// `(file suffix, svg)` for each plot of a table.
fn plots(cmd: Command, t: &Table) -> Vec<(String, String)> {
    let series = |names: &[&str]| -> Vec<(String, Vec<f64>)> {
        names.iter().filter_map(|n| t.numbers(n).map(|v| (n.to_string(), v))).collect()
    };
    let draw = |title: &str, x: &str, names: &[&str]| {
        let xs = t.numbers(x).unwrap_or_default();
        let s = series(names);
        let refs: Vec<(&str, Vec<f64>)> = s.iter().map(|(n, v)| (n.as_str(), v.clone())).collect();
        svg::line_plot(title, x, &xs, &refs)
    };
    match cmd {
        Command::Figures => vec![
            (
                "sigma_minus".into(),
                draw(
                    "reduced spectrum at the extremal phases",
                    "mu",
                    &["sigma_minus_psi0_approx", "sigma_minus_psi1_approx", "sigma_minus_psi0_exact", "sigma_minus_psi1_exact"],
                ),
            ),
            ("delta2_minus".into(), draw("squeezed quadrature variance", "mu", &["delta2_minus"])),
            ("delta2_plus".into(), draw("anti-squeezed quadrature variance", "mu", &["delta2_plus"])),
        ],
        Command::SpectraExact => vec![("".into(), draw("exact reduced spectra", "mu", &["sigma_minus", "sigma_zero"]))],
        Command::SpectraApprox => vec![(
            "".into(),
            draw("approximate reduced spectra", "mu", &["sigma_minus", "sigma_zero", "delta2_minus"]),
        )],
        Command::Intensity => vec![(
            "".into(),
            draw("intensity spectra", "mu", &["port1_smooth", "port2_smooth", "sum_smooth", "diff_smooth"]),
        )],
        Command::OracleCollision => vec![("".into(), draw("collision model moments", "t", &["q", "p", "p2"]))],
        _ => Vec::new(),
    }
}

fn svg_path(out: Option<&Path>, cmd: Command, suffix: &str) -> PathBuf {
    let stem = match out {
        Some(p) => p.with_extension(""),
        None => PathBuf::from(cmd.name()),
    };
    let mut s = stem.into_os_string();
    if !suffix.is_empty() {
        s.push(format!(".{suffix}"));
    }
    s.push(".svg");
    PathBuf::from(s)
}

fn emit(cli: &Cli, rc: &RunConfig, t: &Table) -> std::io::Result<()> {
    let body = match rc.output.format {
        Format::Csv => t.to_csv(),
        Format::Json => t.to_json(),
    };
    let out = rc.output.path.as_ref().map(PathBuf::from);
    match &out {
        Some(p) => std::fs::write(p, body)?,
        None => print!("{body}"),
    }
    if cli.svg {
        let list = plots(cli.command, t);
        if list.is_empty() {
            eprintln!("note: `{}` has no plot; --svg ignored", cli.command.name());
        }
        for (suffix, svg) in list {
            let p = svg_path(out.as_deref(), cli.command, &suffix);
            std::fs::write(&p, svg)?;
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(())
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    let result = resolve_config(&cli).and_then(|rc| run_command(cli.command, &rc).map(|t| (rc, t)));
    match result {
        Ok((rc, t)) => match emit(&cli, &rc, &t) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: cannot write output: {e}");
                ExitCode::from(1)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

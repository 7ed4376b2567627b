//! Command-line front end: scenario loading, pipeline orchestration and
//! delimited-text exports.
//!
//! All quantities are dimensionless: wall temperature 1, ball radius 1 and
//! (for the grey problem) light speed 1. A general wall temperature
//! `theta_w` and radius `R` reduce to this normalization by rescaling
//! velocities with `sqrt(theta_w)`, lengths with `R` and times with
//! `R / sqrt(theta_w)`; fluxes pick up the corresponding Jacobian, so no
//! separate kernels are needed.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 numeric failure,
//! 4 I/O failure, 5 statistical cross-check failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use knudsen::error::Error;
use knudsen::kernels::{Kernel, KernelVariant};
use knudsen::scenario::{preset, ProblemKind, ScenarioConfig};

mod pipeline;
mod summary;

#[derive(Parser)]
#[command(name = "knudsen", version, about = "Relaxation of a collisionless gas in the unit ball")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Shipped preset: gas-bounded-default or radiative-default.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// TOML scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioConfig, Error> {
        let mut cfg = match (&self.preset, &self.config) {
            (Some(name), None) => preset(name)?,
            (None, Some(path)) => ScenarioConfig::from_path(path)?,
            _ => return Err(Error::validation("<args>", "pass exactly one of --preset, --config")),
        };
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the exit-time kernel and its integral identities.
    Kernel {
        /// gas or monokinetic.
        #[arg(long, default_value = "gas")]
        variant: String,
        /// Upper end of the sampled tau grid.
        #[arg(long, default_value_t = 6.0)]
        max_tau: f64,
        /// Number of sample points.
        #[arg(long, default_value_t = 240)]
        samples: usize,
        /// Optional export path for the sampled curve.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Solve the renewal equation for the wall flux.
    Solve(ScenarioArgs),
    /// Locate zeros of 1 - K~ and the spectral abscissa (grey kernel).
    Spectrum {
        /// Search depth into the left half-plane.
        #[arg(long, default_value_t = 1.5)]
        strip_depth: f64,
        #[arg(long, default_value = "out")]
        output_dir: PathBuf,
    },
    /// Equilibrium-gap error curves and decay fits for the gas field.
    Field(ScenarioArgs),
    /// Lower-bound envelope sweep for concentrated data.
    Bounds {
        /// Concentration radius of the initial box.
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
        /// Absorbing window length.
        #[arg(long, default_value_t = 1.0)]
        t_window: f64,
        /// Lebesgue exponent of the norm in the denominator.
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value = "out")]
        output_dir: PathBuf,
    },
    /// Monte Carlo particle cross-check of the renewal flux.
    Mc(ScenarioArgs),
    /// Full pipeline: kernel checks, solve, analysis, exports, summary.
    Run(ScenarioArgs),
}

fn parse_variant(s: &str) -> Result<Kernel, Error> {
    match s {
        "gas" => Ok(Kernel::gas_maxwellian()),
        "monokinetic" => Ok(Kernel::monokinetic()),
        other => Err(Error::validation(
            "variant",
            &format!("unknown kernel `{other}`; expected gas or monokinetic"),
        )),
    }
}

fn exit_category(err: &Error) -> u8 {
    match err {
        Error::Validation { .. } | Error::TableFormat(_) => 2,
        Error::Io(_) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_category(&err))
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode, Error> {
    match cmd {
        Command::Kernel { variant, max_tau, samples, output } => {
            let k = parse_variant(&variant)?;
            pipeline::kernel_report(&k, max_tau, samples, output.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve(args) => {
            let cfg = args.load()?;
            let stage = pipeline::solve_stage(&cfg)?;
            pipeline::export_solution(&cfg, &stage)?;
            print!("{}", stage.summary);
            Ok(ExitCode::SUCCESS)
        }
        Command::Spectrum { strip_depth, output_dir } => {
            let doc = pipeline::spectrum_stage(strip_depth, &output_dir)?;
            print!("{doc}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Field(args) => {
            let cfg = args.load()?;
            if cfg.problem != ProblemKind::Gas {
                return Err(Error::validation(
                    "problem",
                    "the field subcommand needs a gas scenario",
                ));
            }
            let stage = pipeline::solve_stage(&cfg)?;
            let doc = pipeline::field_stage(&cfg, &stage)?;
            print!("{doc}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Bounds { epsilon, t_window, p, output_dir } => {
            let doc = pipeline::bounds_stage(epsilon, t_window, p, &output_dir)?;
            print!("{doc}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Mc(args) => {
            let mut cfg = args.load()?;
            cfg.monte_carlo.enabled = true;
            cfg.validate()?;
            let stage = pipeline::solve_stage(&cfg)?;
            let mc = pipeline::mc_stage(&cfg, &stage)?;
            print!("{}", mc.summary);
            if mc.pass {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("error: Monte Carlo flux disagrees with the renewal solution");
                Ok(ExitCode::from(5))
            }
        }
        Command::Run(args) => {
            let cfg = args.load()?;
            let (doc, pass) = pipeline::run_all(&cfg)?;
            print!("{doc}");
            Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(5) })
        }
    }
}

#[allow(dead_code)]
fn variant_name(v: KernelVariant) -> &'static str {
    match v {
        KernelVariant::GasMaxwellian => "gas",
        KernelVariant::Monokinetic => "monokinetic",
    }
}

//! `kineticon` command-line front end.
//!
//! Exit codes: 0 success, 2 validation error, 3 per-point (or single-point
//! numerical) failure, 4 I/O error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kineticon::Error;

#[derive(Debug, Parser)]
#[command(
    name = "kineticon",
    version,
    about = "Kinetic-inductance qubit design and simulation"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// JSON sweep config. Required by `sweep`; seeds fixed values elsewhere.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output file. Tables go to stdout when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Table format; defaults to the config's `output.format`, else csv.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Validity warnings become errors.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Fock truncation override.
    #[arg(long, global = true, value_name = "N")]
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Csv,
    Contour,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Family {
    Te,
    Tm,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single-point circuit parameters and spectrum.
    Qubit(QubitArgs),
    /// Config-driven grid sweep.
    Sweep,
    /// Readout resonator: S21 sweep or Duffing shift.
    Resonator {
        #[command(subcommand)]
        action: ResonatorAction,
    },
    /// Rectangular cavity modes and qubit-cavity coupling.
    Cavity {
        #[command(subcommand)]
        action: CavityAction,
    },
    /// Built-in and config-declared materials.
    Materials {
        #[command(subcommand)]
        action: MaterialsAction,
    },
}

#[derive(Debug, Args)]
pub struct QubitArgs {
    /// Total kinetic inductance, nH.
    #[arg(long, requires = "istar_ua", conflicts_with = "material")]
    pub l_nh: Option<f64>,
    /// Characteristic current, µA.
    #[arg(long, requires = "l_nh")]
    pub istar_ua: Option<f64>,
    /// Material name; the nanowire is then given by its dimensions.
    #[arg(long, requires_all = ["w_um", "rho_uohm_cm"])]
    pub material: Option<String>,
    /// Normal-state resistivity, µΩ·cm.
    #[arg(long)]
    pub rho_uohm_cm: Option<f64>,
    /// Nanowire width, µm.
    #[arg(long)]
    pub w_um: Option<f64>,
    /// Nanowire length, µm (defaults to the width).
    #[arg(long)]
    pub l_um: Option<f64>,
    /// Nanowire thickness, nm.
    #[arg(long, default_value_t = 5.0)]
    pub t_nm: f64,
    /// Resonance frequency, GHz.
    #[arg(long, default_value_t = 100.0)]
    pub f_ghz: f64,
    /// Levels written with `--out`.
    #[arg(long, default_value_t = 5)]
    pub levels: usize,
}

#[derive(Debug, Subcommand)]
pub enum ResonatorAction {
    /// |S21| sweep; the window defaults to the small-signal resonance.
    S21 {
        #[command(flatten)]
        window: Window,
        #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_set)]
        sets: Vec<(String, f64)>,
    },
    /// Power-dependent resonance shift.
    Duffing {
        /// Incident power, W.
        #[arg(long)]
        power: f64,
        #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_set)]
        sets: Vec<(String, f64)>,
    },
}

#[derive(Debug, Subcommand)]
pub enum CavityAction {
    /// Table of TE/TM modes.
    Modes {
        #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_set)]
        sets: Vec<(String, f64)>,
    },
    /// Permittivity that moves one mode to a target frequency.
    Loading {
        #[arg(long)]
        target_ghz: f64,
        #[arg(long, value_enum, default_value = "te")]
        family: Family,
        #[arg(long, default_value_t = 1)]
        m: u32,
        #[arg(long, default_value_t = 0)]
        n: u32,
        #[arg(long, default_value_t = 1)]
        p: u32,
        #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_set)]
        sets: Vec<(String, f64)>,
    },
    /// Dressed levels and dispersive shift of the coupled system.
    Dressed {
        #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_set)]
        sets: Vec<(String, f64)>,
    },
    /// Transmission of the coupled system.
    S21 {
        #[command(flatten)]
        window: Window,
        #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_set)]
        sets: Vec<(String, f64)>,
    },
}

#[derive(Debug, Args)]
pub struct Window {
    #[arg(long, requires = "stop_ghz")]
    pub start_ghz: Option<f64>,
    #[arg(long, requires = "start_ghz")]
    pub stop_ghz: Option<f64>,
    #[arg(long, default_value_t = 2001)]
    pub points: usize,
}

#[derive(Debug, Subcommand)]
pub enum MaterialsAction {
    List,
    Show { name: String },
}

fn parse_set(s: &str) -> Result<(String, f64), String> {
    let (key, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))?;
    let value: f64 = value.trim().parse().map_err(|e| format!("`{key}`: {e}"))?;
    Ok((key.trim().to_string(), value))
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } => 4,
        Error::Convergence { .. }
        | Error::EigenNoConvergence(_)
        | Error::Bifurcation { .. }
        | Error::FixedPointNoConvergence { .. }
        | Error::AmbiguousResonance { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    match commands::run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

//! Command-line front end; all logic lives in the library's `cli` module.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use optospring::cli::{self, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "optospring",
    version,
    about = "Optomechanical eigenmode squeezing in a detuned cavity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario config file (TOML; see README for the format).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Detector preset name (overrides the config's system section).
    #[arg(long)]
    preset: Option<String>,
    /// Output directory for emitted files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit SVG plots next to the CSV files.
    #[arg(long)]
    plot: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenmode survey: frequencies, dampings, vectors, critical depth.
    Modes {
        #[command(flatten)]
        common: Common,
    },
    /// Internal and output spectra for a list of modulation depths.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Modulation depths as fractions of m_c, comma-separated.
        #[arg(long, value_delimiter = ',')]
        depths: Vec<f64>,
    },
    /// Thermal-influence factors for detector presets.
    Xi {
        #[command(flatten)]
        common: Common,
        /// Preset names to evaluate (default: all built-ins).
        #[arg(long, value_delimiter = ',')]
        presets: Vec<String>,
    },
    /// Monte Carlo cross-check of the spectral predictions.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Depth fractions for the cross-check.
        #[arg(long, value_delimiter = ',')]
        depths: Vec<f64>,
        /// Random seed for the noise realizations.
        #[arg(long)]
        seed: Option<u64>,
        /// Negative control: corrupt the modulation sign in the simulation.
        #[arg(long)]
        corrupt_epsilon: bool,
    },
}

fn load_config(common: &Common) -> Result<ScenarioConfig, optospring::Error> {
    let mut cfg = match &common.config {
        Some(path) => ScenarioConfig::from_file(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(name) = &common.preset {
        cfg.system.preset = Some(name.clone());
        cfg.system.coupling = None;
        cfg.system.optical_damping = None;
    } else if cfg.system.preset.is_none() && cfg.system.coupling.is_none() {
        // Bare invocation: the reference dimensionless set.
        cfg.system.coupling = Some(0.9);
        cfg.system.optical_damping = Some(0.1);
        cfg.system.feedback = Some(0.1);
    }
    if let Some(dir) = &common.out {
        cfg.output.directory = Some(dir.clone());
    }
    if common.plot {
        cfg.output.plot = true;
    }
    Ok(cfg)
}

fn run() -> Result<i32, optospring::Error> {
    match Cli::parse().command {
        Command::Modes { common } => {
            let resolved = load_config(&common)?.resolve()?;
            print!("{}", cli::cmd_modes(&resolved)?);
            Ok(cli::EXIT_OK)
        }
        Command::Spectrum { common, depths } => {
            let resolved = load_config(&common)?.resolve()?;
            let depths = if depths.is_empty() {
                vec![0.0, 0.5, 0.9]
            } else {
                depths
            };
            print!("{}", cli::cmd_spectrum(&resolved, &depths)?);
            Ok(cli::EXIT_OK)
        }
        Command::Xi { common, presets } => {
            let resolved = load_config(&common)?.resolve()?;
            print!("{}", cli::cmd_xi(&resolved, &presets)?);
            Ok(cli::EXIT_OK)
        }
        Command::Oracle {
            common,
            depths,
            seed,
            corrupt_epsilon,
        } => {
            let mut cfg = load_config(&common)?;
            if !depths.is_empty() {
                cfg.oracle.depth_fractions = depths;
            }
            if let Some(s) = seed {
                cfg.oracle.seed = s;
            }
            if corrupt_epsilon {
                cfg.oracle.corrupt_epsilon = true;
            }
            let resolved = cfg.resolve()?;
            let (report, result) = cli::cmd_oracle(&resolved)?;
            print!("{report}");
            Ok(if result.pass() {
                cli::EXIT_OK
            } else {
                cli::EXIT_ORACLE_FAIL
            })
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(cli::exit_code_for(&err) as u8)
        }
    }
}

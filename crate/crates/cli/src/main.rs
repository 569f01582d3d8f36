//! Command-line front end: field sweeps, filter response, amplifier gain,
//! noise-chain SNR, sensitivity budgets, design scans, curve fits and echo
//! SNR extraction, driven by a flat `key = value` configuration.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use commands::CliError;
use config::Config;

#[derive(Parser)]
#[command(
    name = "kipakit",
    about = "Design and analysis tool for a kinetic-inductance parametric amplifier used as an ESR micro-resonator",
    version
)]
struct Cli {
    /// Parameter file overriding the built-in reference-device defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<String>,

    /// Output path for the generated CSV or report (stdout if omitted).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<String>,

    /// Override one value as `section.key=value` (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// ESR transition sweep versus static field.
    Spectrum,
    /// Stepped-impedance filter transmission sweep.
    Sif,
    /// Degenerate amplifier reflection-gain sweep.
    KipaGain,
    /// SNR and SNR gain versus first-stage gain, with optional data fit.
    SnrChain,
    /// Spin-sensitivity budget report.
    Budget,
    /// Pump power and sensitivity scaling versus kinetic inductance fraction.
    OptimizeAlpha,
    /// Least-squares fit of a named model to a two-column CSV.
    Fit {
        /// lorentzian | exp-decay | exp-recovery | snr-vs-gain | gsnr-vs-te
        kind: String,
    },
    /// Amplitude SNR of an echo trace against a blank trace.
    EchoSnr,
}

fn run(cli: &Cli) -> Result<commands::CommandOutput, CliError> {
    let mut cfg = Config::defaults();
    if let Some(path) = &cli.config {
        cfg.merge_file(path)?;
    }
    for assignment in &cli.sets {
        cfg.set(assignment)?;
    }
    match &cli.command {
        Command::Spectrum => commands::cmd_spectrum(&cfg).map(Into::into),
        Command::Sif => commands::cmd_sif(&cfg).map(Into::into),
        Command::KipaGain => commands::cmd_kipa_gain(&cfg).map(Into::into),
        Command::SnrChain => commands::cmd_snr_chain(&cfg).map(Into::into),
        Command::Budget => commands::cmd_budget(&cfg),
        Command::OptimizeAlpha => commands::cmd_optimize_alpha(&cfg).map(Into::into),
        Command::Fit { kind } => commands::cmd_fit(&cfg, kind).map(Into::into),
        Command::EchoSnr => commands::cmd_echo_snr(&cfg).map(Into::into),
    }
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(output) => {
            if let Some(path) = &cli.out {
                if let Err(e) = std::fs::write(path, &output.primary) {
                    eprintln!("config error: cannot write {path}: {e}");
                    std::process::exit(2);
                }
                // with the artifact on disk, show the readable form too
                if let Some(summary) = &output.summary {
                    print!("{summary}");
                }
            } else {
                print!("{}", output.primary);
            }
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(match e {
                CliError::Config(_) => 2,
                CliError::Numerical(_) => 3,
            });
        }
    }
}

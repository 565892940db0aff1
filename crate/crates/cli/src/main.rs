//! `corrmfg` — verify correlated mean field game solutions and run the
//! N-player experiments.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 on
//! input errors. Every command writes its outputs plus a run manifest to
//! `--out` (default `$CORRMFG_OUT_DIR`, else `corrmfg-out`).

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Io(String),
}

impl From<corrmfg::Error> for CliError {
    fn from(e: corrmfg::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Parser, Debug, Clone)]
#[command(name = "corrmfg", version, about = "Correlated equilibria in finite mean field games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Where the game and suggestion come from.
#[derive(Args, Debug, Clone)]
pub struct Source {
    /// `toy` for the builtin two-state game, or a path to a JSON config.
    pub source: String,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub c0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub c1: Option<String>,
    /// Shift mass from -1 to +1 in the first-step flow value m_1^+.
    #[arg(long = "perturb-m1", allow_hyphen_values = true)]
    pub perturb_m1: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct RunOpts {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub reps: Option<u64>,
    /// `rational` or `float`.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Check (R1), (R2), consistency and optimality of a suggestion.
    Verify {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Solve the conditional DPP and print the value tables.
    Dpp {
        #[command(flatten)]
        source: Source,
        /// Strategy name (toy) or index; all strategies when omitted.
        #[arg(long)]
        phi: Option<String>,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Monte Carlo cost of player 1 in the N-player game.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[arg(long = "N", visible_alias = "n")]
        n: usize,
        /// Deviation rule for player 1 (identity when omitted).
        #[arg(long)]
        deviation: Option<String>,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Observed improvement of the default deviation family over N.
    EpsilonScan {
        #[command(flatten)]
        source: Source,
        #[arg(long = "N", visible_alias = "n", value_delimiter = ',')]
        n: Vec<usize>,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Expected distance between the empirical flow and the drawn flow.
    ChaosScan {
        #[command(flatten)]
        source: Source,
        #[arg(long = "N", visible_alias = "n", value_delimiter = ',')]
        n: Vec<usize>,
        /// Condition on one flow atom.
        #[arg(long)]
        flow_atom: Option<usize>,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Scan the (c0, c1) plane of the toy example for passing parameters.
    WindowScan {
        #[arg(long, default_value = "1/5")]
        beta: String,
        #[arg(long, default_value_t = 16)]
        grid: usize,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Re-run a command from its run manifest.
    Replay {
        manifest: PathBuf,
        /// Output directory (defaults to the manifest's directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse_from(&argv);
    match commands::dispatch(cli, argv, None) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Input(e)) | Err(CliError::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

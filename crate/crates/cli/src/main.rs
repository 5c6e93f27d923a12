//! `gambit`: evaluate chess gambits with a UCI engine and a game corpus.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gambit_core::metrics::ProbabilityMode;
use thiserror::Error;

mod commands;
mod config;
mod report;
mod selfcheck;

use config::Overrides;
use report::SkewBasis;
use selfcheck::Perturbation;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("engine: {0}")]
    Engine(String),
    #[error("corpus: {0}")]
    Corpus(String),
    #[error("{0} gambit(s) could not be ranked")]
    Rank(usize),
    #[error("failing checks: {0}")]
    SelfCheck(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Engine(_) => 3,
            CliError::Corpus(_) => 4,
            CliError::Rank(_) => 5,
            CliError::SelfCheck(_) | CliError::Other(_) => 1,
        }
    }
}

#[derive(Copy, Clone, Debug, clap::ValueEnum)]
enum ModeArg {
    Raw,
    Renorm,
}

#[derive(Parser)]
#[command(name = "gambit", version, about = "Gambit analysis with a UCI engine and a game corpus")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Configuration file (TOML); the built-in catalog is used without one.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// UCI engine executable.
    #[arg(long, global = true)]
    engine: Option<PathBuf>,
    /// Search depth in plies.
    #[arg(long, global = true)]
    depth: Option<u32>,
    /// MultiPV lines and default number of continuation rows.
    #[arg(long, global = true)]
    multipv: Option<u32>,
    /// Corpus index file.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Weighting of the continuation probabilities.
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Evaluation cache file.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Analyse gambits and write per-gambit reports.
    Analyze {
        /// Gambit names; all configured gambits when omitted.
        names: Vec<String>,
    },
    /// Rank all configured gambits by initial Q and by skew.
    Rank {
        #[arg(long, value_enum, default_value = "outcome")]
        skew_basis: SkewBasis,
    },
    /// Corpus index maintenance.
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
    /// Run the embedded consistency checks.
    Selfcheck {
        #[arg(long, value_enum, hide = true)]
        perturb: Option<Perturbation>,
    },
    /// Scripted UCI engine used for hermetic runs.
    #[command(hide = true)]
    MockEngine {
        #[arg(long)]
        script: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Index PGN files into the corpus file.
    Build {
        #[arg(required = true)]
        pgn: Vec<PathBuf>,
        /// Corpus identifier recorded in reports.
        #[arg(long)]
        id: Option<String>,
        /// Plies indexed per game.
        #[arg(long, default_value_t = 40)]
        max_ply: u32,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = cli.global;
    let overrides = Overrides {
        engine: g.engine,
        depth: g.depth,
        multipv: g.multipv,
        corpus: g.corpus,
        mode: g.mode.map(|m| match m {
            ModeArg::Raw => ProbabilityMode::Raw,
            ModeArg::Renorm => ProbabilityMode::Renormalized,
        }),
        out: g.out,
        cache: g.cache,
    };
    let load = || {
        config::load(g.config.as_deref(), &overrides).map_err(|e| CliError::Config(format!("{e:#}")))
    };
    match cli.command {
        Command::Analyze { names } => commands::analyze(&load()?, &names),
        Command::Rank { skew_basis } => commands::rank(&load()?, skew_basis),
        Command::Corpus {
            command: CorpusCommand::Build { pgn, id, max_ply },
        } => commands::corpus_build(&load()?, &pgn, id, max_ply),
        Command::Selfcheck { perturb } => commands::selfcheck(perturb),
        Command::MockEngine { script } => commands::mock_engine(script.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

mod commands;
mod scenario;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Scenario-driven runs of the elastic scattering solvers.
#[derive(Parser, Debug)]
#[command(name = "elastoscatter", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Directory for CSV outputs; created if missing.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads; 0 lets the pool decide.
    #[arg(long, global = true, env = "ELASTOSCATTER_THREADS", default_value_t = 0)]
    threads: usize,
    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    log_level: log::LevelFilter,
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// Solve the penetrable-obstacle transmission problem.
    SolveTransmission,
    /// Solve the variable-density medium problem.
    SolveMedium,
    /// Far-field pattern and large-radius remainder fit.
    Farfield,
    /// Principal symbol determinant of the transmission system.
    SymbolCheck,
    /// Coercivity threshold of the interior transmission problem.
    ItpThreshold,
    /// Singular-source probe sequence near the boundary.
    Probe,
    /// Refinement study with observed orders.
    Convergence {
        /// Override the levels of the [convergence] section.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<usize>>,
    },
    /// Check the scenario without solving.
    Validate,
}

/// Misuse of the command line or of a scenario section.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn run(cli: Cli) -> anyhow::Result<()> {
    let path = cli
        .scenario
        .clone()
        .ok_or_else(|| UsageError("--scenario <path> is required".into()))?;
    let scenario = scenario::load(&path).map_err(|e| UsageError(format!("{e:#}")))?;
    scenario.validate().map_err(|e| UsageError(format!("invalid scenario: {e:#}")))?;
    if !matches!(cli.command, Command::Validate) {
        std::fs::create_dir_all(&cli.out_dir)?;
    }
    let ctx = commands::Ctx {
        scenario,
        out_dir: cli.out_dir.clone(),
    };
    match cli.command {
        Command::SolveTransmission => commands::solve_transmission_cmd(&ctx),
        Command::SolveMedium => commands::solve_medium_cmd(&ctx),
        Command::Farfield => commands::farfield_cmd(&ctx),
        Command::SymbolCheck => commands::symbol_check_cmd(&ctx),
        Command::ItpThreshold => commands::itp_threshold_cmd(&ctx),
        Command::Probe => commands::probe_cmd(&ctx),
        Command::Convergence { levels } => commands::convergence_cmd(&ctx, levels),
        Command::Validate => commands::validate_cmd(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().filter_level(cli.log_level).init();
    if cli.threads > 0 {
        elastoscatter::exec::init_threads(cli.threads);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

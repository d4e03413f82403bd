use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use newton_soliton_cli::commands::{self, RunContext};
use newton_soliton_cli::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "newton-soliton", version, about = "Ground states, spectra and soliton dynamics of the Schrödinger–Newton equation")]
struct Cli {
    /// TOML run configuration; the shipped defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override `campaign.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override `grid.n`.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Override `campaign.eps` (comma-separated); `evolve` uses the first value.
    #[arg(long, global = true, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Output root; `campaign.out` when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Recompute the ground state even if a cached one exists.
    #[arg(long, global = true)]
    rebuild: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Relax the ground state, compare with the radial reference, fit the decay.
    GroundState,
    /// Kernel residuals, operator identities and coercivity probes.
    Spectrum,
    /// Energy excess against orbit distance for random perturbations.
    Coerce,
    /// One dynamics run with identity checks.
    Evolve,
    /// Dynamics runs over the `ε` list and the energy-expansion fit.
    Scale,
    /// The acceptance suite; exits nonzero if any check fails.
    Validate {
        /// 48³ grids and loose tolerances.
        #[arg(long)]
        quick: bool,
    },
}

fn config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::shipped(),
    };
    if let Some(seed) = cli.seed {
        cfg.campaign.seed = seed;
    }
    if let Some(n) = cli.grid {
        cfg.grid.n = n;
    }
    if let Some(eps) = &cli.eps {
        cfg.campaign.eps = eps.clone();
    }
    cfg.check()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = config(&cli).and_then(|cfg| {
        let ctx = RunContext::new(cfg, cli.out.clone(), cli.rebuild);
        let first_eps = cli.eps.as_ref().and_then(|e| e.first().copied());
        match cli.command {
            Command::GroundState => commands::ground_state(&ctx),
            Command::Spectrum => commands::spectrum(&ctx),
            Command::Coerce => commands::coerce(&ctx),
            Command::Evolve => commands::evolve(&ctx, first_eps),
            Command::Scale => commands::scale(&ctx),
            Command::Validate { quick } => commands::validate(&ctx, quick),
        }
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

//! Command line front end: scenario-driven runs of the energy-decay
//! pipeline with CSV/JSON artifacts.
//!
//! Exit codes: 0 success, 2 configuration error, 3 hypothesis violation
//! (diagnostic report still written), 4 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use osciwave::scenario::{load_scenario, run_scenario, ScenarioConfig, Stage};

#[derive(Parser)]
#[command(
    name = "osciwave",
    version,
    about = "Energy decay for wave equations with oscillating time-dependent dissipation"
)]
struct Cli {
    /// Output directory for artifacts (overrides the scenario's setting).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (overrides the OSCIWAVE_THREADS environment variable).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Relative tolerance for mode integration (overrides the scenario's).
    #[arg(long, global = true)]
    rtol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage the scenario requests.
    Run { scenario: String },
    /// Hypothesis checks and threshold exponents only.
    Verify { scenario: String },
    /// Zone boundary table only.
    Zones { scenario: String },
    /// Total-energy simulation only.
    Simulate { scenario: String },
    /// Dissipative-zone series comparison only.
    Volterra { scenario: String },
    /// Hyperbolic-zone symbol scan only.
    Diag { scenario: String },
    /// Decay fit and boundedness report (runs the simulation it needs).
    Decay { scenario: String },
}

impl Command {
    fn scenario_source(&self) -> &str {
        match self {
            Command::Run { scenario }
            | Command::Verify { scenario }
            | Command::Zones { scenario }
            | Command::Simulate { scenario }
            | Command::Volterra { scenario }
            | Command::Diag { scenario }
            | Command::Decay { scenario } => scenario,
        }
    }

    /// The stage this subcommand restricts the run to; None for `run`.
    fn stage(&self) -> Option<Stage> {
        match self {
            Command::Run { .. } => None,
            Command::Verify { .. } => Some(Stage::Verify),
            Command::Zones { .. } => Some(Stage::Zones),
            Command::Simulate { .. } => Some(Stage::Simulate),
            Command::Volterra { .. } => Some(Stage::Volterra),
            Command::Diag { .. } => Some(Stage::Diag),
            Command::Decay { .. } => Some(Stage::Decay),
        }
    }
}

fn configure_threads(flag: Option<usize>) {
    let from_env = std::env::var("OSCIWAVE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    if let Some(k) = flag.or(from_env) {
        if k >= 1 {
            // Ignore failure: the global pool can only be set once.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
    }
}

fn execute(cli: &Cli) -> osciwave::Result<()> {
    let mut cfg: ScenarioConfig = load_scenario(cli.command.scenario_source())?;
    if let Some(stage) = cli.command.stage() {
        cfg.run.stages = vec![stage];
    }
    let outcome = run_scenario(&cfg, cli.out.as_deref(), cli.rtol)?;
    for path in &outcome.artifacts {
        println!("wrote {}", path.display());
    }
    if let Some(summary) = &outcome.summary {
        println!(
            "decay: slope {:.4} (stderr {:.1e}), sup_ratio {:.4}, trend {:.4}",
            summary.slope, summary.stderr, summary.sup_ratio, summary.trend
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads(cli.threads);
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

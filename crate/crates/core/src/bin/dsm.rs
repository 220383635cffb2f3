//! Experiment CLI. Exit codes: 0 when every decided check passed (or the
//! probe found no monotonicity violation), 1 when a check or probe failed,
//! 2 for config, usage, or runtime errors.

use clap::{Args, Parser, Subcommand};
use dsm_core::error::Error;
use dsm_core::harness::{self, CliOverrides, RunOutcome};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "dsm",
    version,
    about = "Dynamical-systems solver for monotone operator equations B(u) + eps*u = 0 and B(u) = 0"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Output directory (overrides config output_dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fixed step / initial trial step (overrides [integrator] dt)
    #[arg(long)]
    dt: Option<f64>,
    /// Integration horizon (overrides [stop] t_max)
    #[arg(long = "t-max")]
    t_max: Option<f64>,
    /// Convergence residual tolerance (overrides [stop] residual_tol)
    #[arg(long)]
    tol: Option<f64>,
}

impl Overrides {
    fn into_cli(self) -> CliOverrides {
        CliOverrides {
            out: self.out,
            dt: self.dt,
            t_max: self.t_max,
            tol: self.tol,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured Cauchy problem and apply its checks
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Solve the regularized equation along a decreasing eps list
    SweepEps {
        config: PathBuf,
        /// Strictly decreasing eps values, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Compare the delayed-argument construction against the ODE solve
    PeanoCompare {
        config: PathBuf,
        /// Strictly increasing delay indices, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u32>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print the operator catalog
    ListOperators,
    /// Randomized monotonicity probe of the configured operator
    Probe {
        config: PathBuf,
        /// Number of sample pairs
        #[arg(long)]
        samples: Option<u32>,
        /// RNG seed
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn load_config(path: &PathBuf, overrides: &CliOverrides) -> Result<(harness::ExperimentConfig, String), Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let config = harness::parse_config(&text, overrides)?;
    Ok((config, text))
}

fn print_outcome(outcome: &RunOutcome) {
    for record in &outcome.diagnostics.records {
        let verdict = if record.passed { "pass" } else { "FAIL" };
        println!(
            "check {:<20} {verdict}  worst margin {:+.3e} at {:.6} (tol {:.1e})",
            record.check_name, record.worst_margin, record.location, record.tolerance_used
        );
    }
    for note in &outcome.diagnostics.inconclusive {
        println!("check {:<20} inconclusive: {}", note.check_name, note.reason);
    }
    println!(
        "status: {}  final residual: {:.6e}  steps: {}",
        outcome.report.status.name(),
        outcome.report.final_residual,
        outcome.report.steps_taken
    );
    println!(
        "overall: {}  artifacts: {}",
        if outcome.diagnostics.overall { "pass" } else { "fail" },
        outcome.artifacts.run_dir.display()
    );
}

fn outcome_exit(outcome: &RunOutcome) -> ExitCode {
    print_outcome(outcome);
    if outcome.diagnostics.overall {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn dispatch(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Run { config, overrides } => {
            let (cfg, text) = load_config(&config, &overrides.into_cli())?;
            let outcome = harness::run(&cfg, &text)?;
            Ok(outcome_exit(&outcome))
        }
        Command::SweepEps {
            config,
            eps,
            overrides,
        } => {
            let (cfg, text) = load_config(&config, &overrides.into_cli())?;
            let outcome = harness::sweep_eps(&cfg, &text, &eps)?;
            Ok(outcome_exit(&outcome))
        }
        Command::PeanoCompare {
            config,
            n,
            overrides,
        } => {
            let (cfg, text) = load_config(&config, &overrides.into_cli())?;
            let outcome = harness::peano_compare(&cfg, &text, &n)?;
            Ok(outcome_exit(&outcome))
        }
        Command::ListOperators => {
            print!("{}", harness::list_operators_text()?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Probe {
            config,
            samples,
            seed,
            overrides,
        } => {
            let (cfg, text) = load_config(&config, &overrides.into_cli())?;
            let (path, report) = harness::probe_operator(&cfg, &text, samples, seed)?;
            println!(
                "probe: {} pairs, radius {}, seed {}",
                report.sample_count, report.box_radius, report.seed
            );
            println!(
                "min inner product {:.6e}, min normalized {:.6e}",
                report.min_inner, report.min_normalized
            );
            println!(
                "monotone: {}  report: {}",
                report.monotone(),
                path.display()
            );
            Ok(if report.monotone() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

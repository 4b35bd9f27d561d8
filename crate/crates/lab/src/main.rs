//! `srts-lab` command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use srts_lab::emit::{emit_bounds, emit_csv, emit_svg, emit_sweep};
use srts_lab::experiment::{bound_curves, Metadata};
use srts_lab::{
    load_config, run_experiment, sweep_rho, verify_lemmas, ExperimentConfig, LabError,
    VerifyOptions,
};

#[derive(Debug, Parser)]
#[command(name = "srts-lab", version, about = "Sharpe-ratio bandit experiments")]
struct Cli {
    /// Override the configured base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores). Never changes the output.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Override the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Emit every round instead of at most 2000 points per curve.
    #[arg(long, global = true)]
    full: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every configured policy at the configured rho.
    Run { config: PathBuf },
    /// Run the experiment at each value of `rho_grid`.
    SweepRho { config: PathBuf },
    /// Emit the upper and lower regret-bound curves only.
    Bounds { config: PathBuf },
    /// Check the tail lemmas and the pull-count variance bound.
    VerifyLemmas {
        /// Replications of the pull-count variance simulation.
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        /// Horizon of the pull-count variance simulation.
        #[arg(long, default_value_t = 1000)]
        horizon: usize,
    },
}

fn load(path: &Path, cli: &Cli) -> Result<ExperimentConfig, LabError> {
    let mut cfg = load_config(path)?;
    if let Some(seed) = cli.seed {
        cfg.base_seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn report_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn execute(cli: &Cli) -> Result<ExitCode, LabError> {
    match &cli.command {
        Command::Run { config } => {
            let cfg = load(config, cli)?;
            let result = run_experiment(&cfg, cli.jobs)?;
            for c in &result.curves {
                let (m, se) = c.final_regret();
                println!(
                    "{} rho={} final regret {m:.4} (stderr {se:.4})",
                    c.label, c.rho
                );
            }
            let mut paths = Vec::new();
            if cfg.emit.csv {
                paths.extend(emit_csv(&result, &cfg.out_dir, cli.full)?);
            }
            if cfg.emit.svg {
                paths.push(emit_svg(&result, &cfg.out_dir, cli.full)?);
            }
            report_paths(&paths);
        }
        Command::SweepRho { config } => {
            let cfg = load(config, cli)?;
            let sweep = sweep_rho(&cfg, cli.jobs)?;
            for r in &sweep.rows {
                println!(
                    "rho={} {} final regret {:.4} (stderr {:.4})",
                    r.rho, r.policy, r.final_regret_mean, r.final_regret_stderr
                );
            }
            report_paths(&emit_sweep(
                &sweep,
                &cfg.out_dir,
                cli.full,
                cfg.emit.csv,
                cfg.emit.svg,
            )?);
        }
        Command::Bounds { config } => {
            let cfg = load(config, cli)?;
            let curves = bound_curves(&cfg)?;
            let meta = Metadata::for_config(&cfg);
            report_paths(&emit_bounds(
                &curves,
                &meta,
                &cfg.out_dir,
                cfg.emit.csv,
                cfg.emit.svg,
            )?);
        }
        Command::VerifyLemmas { reps, horizon } => {
            let opts = VerifyOptions {
                horizon: *horizon,
                replications: *reps,
                seed: cli.seed.unwrap_or(0),
                jobs: cli.jobs,
                corrupt: None,
            };
            let report = verify_lemmas(&opts)?;
            print!("{report}");
            if !report.passed() {
                let names: Vec<&str> = report.failures().iter().map(|c| c.name.as_str()).collect();
                eprintln!("lemma verification failed: {}", names.join(", "));
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! `jetflow`: batch front-end for the subsonic jet solver.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use subjet::config::{load_config, RunConfig};
use subjet::pipeline::{run_check, run_failed, run_oracle, run_scan, run_solve, CommandOutcome};
use subjet::Error;

#[derive(Parser)]
#[command(name = "jetflow", version, about = "Fit and verify compressible subsonic jets issuing from a nozzle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the jet for the configured flux, verify it and write the artifacts.
    Solve(RunArgs),
    /// Critical-flux scan over `flow.q_scan`.
    Scan(RunArgs),
    /// Regenerate the reference values into `oracle.json`.
    Oracle {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Re-check the invariants of a stored field without solving.
    Check {
        #[command(flatten)]
        run: RunArgs,
        /// Field CSV written by `solve`.
        #[arg(long)]
        field: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output.dir` of the config, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the scan; overrides `threads` of the config.
    #[arg(long)]
    threads: Option<usize>,
    /// Treat warnings as failures.
    #[arg(long)]
    strict: bool,
}

impl RunArgs {
    fn out_dir(&self, cfg: Option<&RunConfig>) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.and_then(|c| c.output.dir.clone()))
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    fn threads(&self, cfg: &RunConfig) -> usize {
        self.threads
            .or(cfg.threads)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

fn report(command: &str, dir: &Path, outcome: Result<CommandOutcome, Error>) -> ExitCode {
    match outcome {
        Ok(o) => {
            let status = o.summary["status"].as_str().unwrap_or("fail");
            eprintln!("{command}: {status} (summary in {})", dir.join("summary.json").display());
            if let Some(err) = o.summary["error"].as_object() {
                eprintln!("{command}: {}", err.get("message").and_then(|m| m.as_str()).unwrap_or(""));
            }
            for c in o.summary["checks"].as_array().into_iter().flatten() {
                if c["passed"] == false {
                    eprintln!("  {} ({}) failed: {}", c["name"].as_str().unwrap_or(""), c["severity"].as_str().unwrap_or(""), c["detail"].as_str().unwrap_or(""));
                }
            }
            if o.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{command}: {e}");
            ExitCode::from(2)
        }
    }
}

fn with_config(command: &str, args: &RunArgs, f: impl FnOnce(&RunConfig, &Path) -> Result<CommandOutcome, Error>) -> ExitCode {
    match load_config(&args.config) {
        Ok(cfg) => {
            let dir = args.out_dir(Some(&cfg));
            report(command, &dir, f(&cfg, &dir))
        }
        Err(e) => {
            let dir = args.out_dir(None);
            report(command, &dir, run_failed(command, &dir, &e))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve(args) => with_config("solve", &args, |cfg, dir| run_solve(cfg, dir, args.strict)),
        Command::Scan(args) => with_config("scan", &args, |cfg, dir| run_scan(cfg, dir, args.threads(cfg), args.strict)),
        Command::Oracle { out } => report("oracle", &out, run_oracle(&out)),
        Command::Check { run, field } => with_config("check", &run, |cfg, dir| run_check(cfg, &field, dir, run.strict)),
    }
}

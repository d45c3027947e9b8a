//! `fncr`: run experiments, property suites and reference optima.
//!
//! Exit codes: 0 converged or all checks passed, 2 budget or iteration limit,
//! 3 solver error or failed checks, 4 configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use faithful_newton::exec::ExecPolicy;
use faithful_newton::harness::run::error_exit_code;
use faithful_newton::harness::{compute_f_star, run_experiment, run_suite, RawConfig};
use faithful_newton::Error;

#[derive(Parser)]
#[command(name = "fncr", version, about = "Inexact Newton experiments with CR inner solves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// `key = value` file, one pair per line, `#` comments.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    solver: Option<String>,
    /// For example `quadratic(1, 20, 100)` or `synthetic(42, 500, 20, 2, 1.0)`.
    #[arg(long)]
    problem: Option<String>,
    /// CSV trace path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Any config key, `key=value`; repeatable, applied last.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn raw(&self) -> Result<RawConfig, Error> {
        let mut raw = RawConfig::load(&self.config)?;
        if let Some(v) = &self.solver {
            raw.set("solver", v)?;
        }
        if let Some(v) = &self.problem {
            raw.set("problem", v)?;
        }
        if let Some(v) = &self.out {
            raw.set("out", &v.to_string_lossy())?;
        }
        if let Some(v) = self.seed {
            raw.set("seed", &v.to_string())?;
        }
        for pair in &self.overrides {
            raw.set_pair(pair)?;
        }
        Ok(raw)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment, write its CSV trace and print a summary line.
    Run(ConfigArgs),
    /// Run a property suite: cr_properties, lemma_bounds, rate_checks or all.
    Suite {
        name: String,
        #[arg(long)]
        sequential: bool,
    },
    /// Compute the reference optimum for a config's problem and start point.
    Fstar {
        #[arg(long)]
        config: PathBuf,
    },
}

fn fail(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(error_exit_code(err) as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let spec = match args.raw().and_then(RawConfig::into_spec) {
                Ok(s) => s,
                Err(e) => return fail(&e),
            };
            match run_experiment(&spec) {
                Ok(out) => {
                    println!("{}", out.summary);
                    ExitCode::from(out.exit_code() as u8)
                }
                Err(e) => fail(&e),
            }
        }
        Command::Suite { name, sequential } => {
            let policy = if sequential {
                ExecPolicy::Sequential
            } else {
                ExecPolicy::Parallel
            };
            match run_suite(&name, policy) {
                Ok(report) => {
                    for e in &report.entries {
                        println!("{e}");
                    }
                    if report.all_passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(3)
                    }
                }
                Err(e) => fail(&e),
            }
        }
        Command::Fstar { config } => {
            let spec = match RawConfig::load(&config).and_then(RawConfig::into_spec) {
                Ok(s) => s,
                Err(e) => return fail(&e),
            };
            match compute_f_star(&spec) {
                Ok(fs) => {
                    println!(
                        "f_star={:.16e} converged={} gnorm={:.3e} grad_tol={:e} units={}",
                        fs.value, fs.converged, fs.gnorm, fs.grad_tol, fs.units
                    );
                    if fs.converged {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(2)
                    }
                }
                Err(e) => fail(&e),
            }
        }
    }
}

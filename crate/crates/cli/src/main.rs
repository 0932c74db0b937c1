use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hisd_cli::battery;
use hisd_cli::config::{self, SEED_ENV};
use hisd_cli::experiments;
use hisd_cli::runner;
use hisd_cli::CliError;
use hisd_core::theory::LemmaSuite;

#[derive(Parser)]
#[command(name = "hisd", version, about = "Discrete high-index saddle dynamics: runs, figures and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config and write its trace, plot data and summary.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config's `outdir`.
        #[arg(long)]
        outdir: Option<PathBuf>,
    },
    /// Condition numbers of the three Powell cases.
    Table1,
    /// Run the property battery.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        /// Run only this check (or group, e.g. `theory`).
        #[arg(long)]
        only: Option<String>,
        /// Negate one bound check to exercise failure reporting.
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
    /// Produce the plot data of one figure experiment.
    Figures {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
        which: u8,
        #[arg(long, default_value = "figures")]
        outdir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::config(format!("{SEED_ENV} must be an unsigned integer, got '{v}'"))),
        Err(_) => Ok(None),
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config: path, outdir } => {
            let cfg = config::load(&path)?;
            let outdir = outdir
                .or_else(|| cfg.outdir.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            for outcome in runner::cmd_run(&cfg, &outdir)? {
                print!("{}", outcome.summary);
            }
            println!("artifacts = {}", outdir.display());
            Ok(())
        }
        Command::Table1 => {
            let rows = experiments::table1()?;
            print!("{}", experiments::table1_text(&rows));
            if rows.iter().all(experiments::Table1Row::passed) {
                Ok(())
            } else {
                Err(CliError::property("condition numbers differ from the published table"))
            }
        }
        Command::Verify {
            seed,
            trials,
            only,
            inject_fault,
        } => {
            if trials == 0 {
                return Err(CliError::config("--trials must be at least 1"));
            }
            let checks = battery::select(only.as_deref()).map_err(CliError::config)?;
            let fault = inject_fault
                .map(|name| {
                    LemmaSuite::from_name(name.trim_start_matches("theory."))
                        .ok_or_else(|| CliError::config(format!("unknown bound check '{name}'")))
                })
                .transpose()?;
            let report = battery::run_battery(seed, trials, &checks, fault);
            print!("{}", report.text());
            println!("{}", report.failures_json());
            if report.passed() {
                Ok(())
            } else {
                let names: Vec<&str> = report.failures().iter().map(|f| f.name.as_str()).collect();
                Err(CliError::property(format!("failing checks: {}", names.join(", "))))
            }
        }
        Command::Figures { which, outdir } => {
            let report = experiments::run_figure(which, env_seed()?)?;
            experiments::write_figure(&report, &outdir)?;
            print!("{}", report.summary);
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::property(format!("figure {which}: qualitative checks failed")))
            }
        }
    }
}

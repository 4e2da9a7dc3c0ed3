//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::catalog::{self, CATALOG};
use crate::config::{ConfigError, Plan, ScenarioConfig};
use crate::report::{output_stem, sig12, Report};
use crate::runner::{run_plans, RunOptions};

pub const THREADS_ENV: &str = "MAVOL_LAB_THREADS";

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Status {
    Ok = 0,
    GateFailure = 1,
    InvalidConfig = 2,
    NumericalAbort = 3,
}

#[derive(Debug, Parser)]
#[command(name = "mavol-lab", version, about = "Monge-Ampère volumes of direct images on model fibrations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario over its k ladder.
    Run {
        /// Config file, or the id of a bundled scenario.
        config: String,
        /// Output path; `.csv` and `.json` are written next to each other.
        #[arg(long)]
        out: Option<String>,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Run a model scenario over a grid of ε values and k.
    Sweep {
        config: String,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        eps: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<u32>,
        #[arg(long)]
        out: Option<String>,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// List the bundled scenarios.
    Catalog {
        /// Write the bundled configs as `<id>.json` into this directory.
        #[arg(long)]
        export: Option<PathBuf>,
    },
}

#[derive(Debug, clap::Args)]
pub struct ExecArgs {
    /// Worker threads; defaults to $MAVOL_LAB_THREADS, then all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Fill runtime_seconds with wall-clock times (reports stop being
    /// reproducible byte for byte).
    #[arg(long)]
    pub timings: bool,
}

/// Parses `args` (program name first), runs, and returns the exit status.
pub fn main_with<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Status::InvalidConfig as u8 } else { Status::Ok as u8 };
        }
    };
    execute(cli) as u8
}

fn execute(cli: Cli) -> Status {
    match cli.command {
        Command::Catalog { export } => list_catalog(export.as_deref()),
        Command::Run { config, out, exec } => {
            let plan = match load_plan(&config) {
                Ok(p) => p,
                Err(e) => return invalid(e),
            };
            let stem = out.or_else(|| plan.output.clone()).unwrap_or_else(|| plan.scenario.clone());
            let label = plan.scenario.clone();
            run_and_report(vec![(label, plan)], &stem, &exec)
        }
        Command::Sweep { config, eps, k, out, exec } => {
            let plans = load_plan(&config).and_then(|base| {
                let base = base.with_ladder(&k)?;
                let stem = out.clone().unwrap_or_else(|| format!("{}-sweep", base.scenario));
                let plans = eps
                    .iter()
                    .map(|&e| Ok((format!("{}@eps={}", base.scenario, sig12(e)), base.with_eps(e)?)))
                    .collect::<Result<Vec<_>, ConfigError>>()?;
                Ok((plans, stem))
            });
            match plans {
                Ok((plans, stem)) => run_and_report(plans, &stem, &exec),
                Err(e) => invalid(e),
            }
        }
    }
}

fn invalid(e: ConfigError) -> Status {
    eprintln!("mavol-lab: invalid config: {e}");
    Status::InvalidConfig
}

fn load_plan(arg: &str) -> Result<Plan, ConfigError> {
    let path = Path::new(arg);
    let config = match catalog::find(arg) {
        Some(s) if !path.exists() => s.config()?,
        _ => ScenarioConfig::from_path(path)?,
    };
    config.validate()
}

fn thread_count(exec: &ExecArgs) -> Result<Option<usize>, String> {
    if let Some(n) = exec.threads {
        return if n == 0 { Err("--threads must be at least 1".into()) } else { Ok(Some(n)) };
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("{THREADS_ENV}={v:?} is not a positive integer")),
        },
        Err(_) => Ok(None),
    }
}

fn run_and_report(plans: Vec<(String, Plan)>, stem: &str, exec: &ExecArgs) -> Status {
    let threads = match thread_count(exec) {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("mavol-lab: invalid config: {msg}");
            return Status::InvalidConfig;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("mavol-lab: cannot start worker pool: {e}");
            return Status::NumericalAbort;
        }
    };
    for (label, plan) in &plans {
        if plan.effective_ladder().len() < plan.ladder.len() {
            eprintln!(
                "mavol-lab: {label}: base grid has {} points, k ladder capped at {}",
                plan.grid.base_points(),
                crate::config::HEAVY_K_CAP
            );
        }
    }
    let options = RunOptions { timings: exec.timings };
    let report = match pool.install(|| run_plans(&plans, options)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("mavol-lab: {e}");
            return Status::NumericalAbort;
        }
    };
    write_report(&report, stem)
}

fn write_report(report: &Report, stem: &str) -> Status {
    let stem = output_stem(stem);
    match report.write(&stem) {
        Ok((csv, json)) => eprintln!("mavol-lab: wrote {} and {}", csv.display(), json.display()),
        Err(e) => {
            eprintln!("mavol-lab: cannot write report {}: {e}", stem.display());
            return Status::InvalidConfig;
        }
    }
    for g in report.failures() {
        eprintln!("mavol-lab: gate {g}");
    }
    if report.passed() {
        eprintln!("mavol-lab: all {} gates passed", report.gates.len());
        Status::Ok
    } else {
        Status::GateFailure
    }
}

fn list_catalog(export: Option<&Path>) -> Status {
    for s in &CATALOG {
        println!("{:<14} {}", s.id, s.description);
    }
    if let Some(dir) = export {
        let written = std::fs::create_dir_all(dir)
            .and_then(|_| CATALOG.iter().try_for_each(|s| std::fs::write(dir.join(format!("{}.json", s.id)), s.json)));
        if let Err(e) = written {
            eprintln!("mavol-lab: cannot export to {}: {e}", dir.display());
            return Status::InvalidConfig;
        }
    }
    Status::Ok
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{debug, info};
use serde_json::json;

use thermoplast::config::{load_config, RunConfig};
use thermoplast::harness::{self, classify, FailureKind, OracleStatus};
use thermoplast::Error;

#[derive(Parser)]
#[command(name = "thermoplast", version, about = "Thermo-visco-plastic solver with staggered coupling")]
struct Cli {
    /// Run on one thread (bitwise reproducible output).
    #[arg(long, global = true)]
    single_thread: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a coupled simulation and write snapshots, diagnostics and a summary.
    Simulate {
        config: PathBuf,
        /// Overrides `output.directory`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Manufactured-solution convergence study.
    Mms {
        config: PathBuf,
        /// Number of uniform spatial refinements.
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// Temporal study instead: comma-separated step counts on the configured mesh.
        #[arg(long, value_delimiter = ',')]
        steps: Option<Vec<usize>>,
        /// Write the table as CSV here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare the staggered solution with a monolithic Newton solve.
    Oracle { config: PathBuf },
    /// Parse and validate a configuration without running it.
    Validate { config: PathBuf },
}

fn fail(kind: FailureKind, err: &Error) -> ExitCode {
    debug!("{err}");
    let msg = json!({ "status": kind.as_str(), "error": err.to_string() });
    eprintln!("{msg}");
    ExitCode::from(kind.exit_code() as u8)
}

fn load(path: &PathBuf) -> Result<RunConfig, ExitCode> {
    load_config(path).map_err(|e| fail(FailureKind::ConfigInvalid, &e))
}

fn configure_threads(single: bool) {
    let n = if single {
        Some(1)
    } else {
        std::env::var("THERMOPLAST_THREADS").ok().and_then(|v| v.parse::<usize>().ok())
    };
    if let Some(n) = n {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialised: {e}");
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, ExitCode> {
    match cli.command {
        Command::Validate { config } => {
            let cfg = load(&config)?;
            harness::prepare(&cfg).map_err(|e| fail(classify(&e), &e))?;
            println!("{}", json!({ "status": "valid", "dim": cfg.dim() }));
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { config, output } => {
            let mut cfg = load(&config)?;
            if let Some(dir) = output {
                cfg.output.directory = dir;
            }
            let run = harness::run_simulate(&cfg).map_err(|e| fail(classify(&e), &e))?;
            println!("{}", serde_json::to_string_pretty(&run.summary).expect("summary serializes"));
            if run.summary.converged {
                info!("outputs written to {}", cfg.output.directory.display());
                Ok(ExitCode::SUCCESS)
            } else {
                let msg = json!({
                    "status": FailureKind::NotConverged.as_str(),
                    "error": "outer iteration did not converge",
                    "outer_deltas": run.summary.outer_deltas,
                });
                eprintln!("{msg}");
                Ok(ExitCode::from(FailureKind::NotConverged.exit_code() as u8))
            }
        }
        Command::Mms {
            config,
            levels,
            steps,
            output,
        } => {
            let cfg = load(&config)?;
            let table = match steps {
                Some(s) => harness::run_time_study(&cfg, &s),
                None => harness::run_mms(&cfg, levels),
            }
            .map_err(|e| fail(classify(&e), &e))?;
            let csv = table.to_csv();
            if let Some(path) = output {
                std::fs::write(&path, &csv).map_err(|e| {
                    let e = Error::Io { path: path.display().to_string(), source: e };
                    fail(classify(&e), &e)
                })?;
            }
            print!("{csv}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { config } => {
            let cfg = load(&config)?;
            let report = harness::run_oracle(&cfg).map_err(|e| fail(classify(&e), &e))?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            let code = match report.status {
                OracleStatus::Agree => 0,
                OracleStatus::PicardDiverged => FailureKind::NotConverged.exit_code(),
                OracleStatus::Disagree | OracleStatus::OracleFailed => FailureKind::SolverFailure.exit_code(),
            };
            Ok(ExitCode::from(code as u8))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    configure_threads(cli.single_thread);
    match run(cli) {
        Ok(c) | Err(c) => c,
    }
}

//! Declarative experiment runner behind the `rdslab` binary.
//!
//! A config is a TOML file with a `[model]`, an optional `[measure]`, an
//! optional `[budget]` and an `[experiment]` table tagged by `kind`.
//! Unknown keys are rejected.

mod config;
mod run;
mod suite;
#[cfg(test)]
mod tests;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

pub use config::{
    Experiment, ExperimentConfig, FamilyMember, FurstenbergSpec, ObservableSpec, StabilityFamily, TermSpec,
};
pub use run::{config_hash, execute, run_dir_name, run_to_dir, Flat, Outcome, RunRecord, REPORT_FORMAT};
pub use suite::{lookup, run_suite, Assertion, Case, Manifest, Op, SuiteReport, SuiteRow};

use crate::error::{Error, Result};
use crate::models::build_model;
use crate::spectral::{build_galerkin, write_operator};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "RDSLAB_OUT";
const DEFAULT_OUT: &str = "rdslab-runs";

/// Version line printed by `--version`.
pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (report format 1, operator format 1)");

#[derive(Debug, Parser)]
#[command(name = "rdslab", version = VERSION, about = "Random dynamical systems laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment config.
    Run {
        config: PathBuf,
        /// Output directory (default: a fresh directory under $RDSLAB_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run every case of a manifest and check its assertions.
    Suite {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Write the weighted Galerkin matrix of a spectrum config.
    ExportOperator {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn out_root() -> PathBuf {
    std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}

fn error_object(e: &Error) -> String {
    json!({ "error": { "kind": e.kind(), "message": e.to_string() } }).to_string()
}

/// Dispatch a parsed command line. Results go to stdout as JSON, errors to
/// stderr as a JSON object.
pub fn dispatch(cli: Cli) -> ExitCode {
    match run_command(cli.command) {
        Ok((summary, ok)) => {
            println!("{summary}");
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{}", error_object(&e));
            ExitCode::from(2)
        }
    }
}

fn run_command(cmd: Command) -> Result<(serde_json::Value, bool)> {
    match cmd {
        Command::Run {
            config,
            out,
            seed,
            threads,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let dir = out.unwrap_or_else(|| out_root().join(run_dir_name(&stem(&config), &config_hash(&cfg))));
            let rec = run_to_dir(&cfg, &dir, threads)?;
            Ok((
                json!({ "dir": rec.dir, "experiment": cfg.experiment.name(), "warnings": rec.report["warnings"] }),
                true,
            ))
        }
        Command::Suite { manifest, out, threads } => {
            let dir = out.unwrap_or_else(|| {
                let ts = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
                out_root().join(format!("{}-{ts}", stem(&manifest)))
            });
            let rep = run_suite(&manifest, &dir, threads)?;
            let failed: Vec<_> = rep.rows.iter().filter(|r| r.status != "pass").collect();
            Ok((
                json!({ "dir": dir, "rows": rep.rows.len(), "passed": rep.passed, "failures": failed }),
                rep.passed,
            ))
        }
        Command::ExportOperator { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let Experiment::Spectrum { k, s } = cfg.experiment else {
                return Err(Error::Config(format!(
                    "export-operator needs a spectrum experiment, found {}",
                    cfg.experiment.name()
                )));
            };
            let model = build_model(&cfg.model)?;
            let mu = cfg.measure.clone().unwrap_or_else(|| model.template());
            let op = build_galerkin(&model, &mu, k, s)?;
            let file = std::fs::File::create(&out)?;
            let bytes = write_operator(&op, s, std::io::BufWriter::new(file))?;
            Ok((
                json!({ "file": out, "bytes": bytes, "order": op.len(), "model_hash": op.model_hash }),
                true,
            ))
        }
    }
}

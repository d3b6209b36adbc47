//! Experiment runner: configuration, the experiment registry, CSV output and
//! optional SVG plots.
//!
//! Every experiment is a pure function of its parameters and seed. Trial
//! loops draw from per-trial streams and reduce in trial order, so the CSV is
//! byte-identical for any worker count.

pub mod config;
pub mod csv;
mod experiments;
pub mod svg;

pub use config::{parse_args, parse_kv, ExperimentConfig, USAGE};
pub use csv::{fmt_f64, CsvTable};
pub use experiments::EXPERIMENTS;

use crate::error::Error;
use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum HarnessError {
    #[error("configuration error in `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("runtime limit: {0}")]
    Runtime(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit status: 2 for configuration errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } => 2,
            HarnessError::Runtime(_) | HarnessError::Io(_) => 1,
        }
    }

    pub(crate) fn config(key: &str, msg: impl ToString) -> Self {
        HarnessError::Config {
            key: key.to_string(),
            msg: msg.to_string(),
        }
    }

    /// Attributes a library error to the parameter `key` when it stems from
    /// bad input, or to a runtime limit.
    pub(crate) fn from_lib(key: &str, e: Error) -> Self {
        match e {
            Error::TooLarge { .. } => HarnessError::Runtime(e.to_string()),
            Error::LpStatus(_) => HarnessError::Runtime(e.to_string()),
            other => HarnessError::config(key, other),
        }
    }
}

/// Result of one experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub table: CsvTable,
    pub plot: svg::PlotSpec,
}

/// Runs the experiment without touching the file system.
pub fn run_table(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let exp = experiments::lookup(&cfg.experiment)?;
    experiments::check_keys(exp, &cfg.params)?;
    let go = || (exp.run)(cfg);
    match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| HarnessError::Runtime(format!("thread pool: {e}")))?
            .install(go),
        None => go(),
    }
}

/// Runs the experiment and writes the CSV (and SVG if requested). Returns
/// the table.
pub fn run(cfg: &ExperimentConfig) -> Result<CsvTable, HarnessError> {
    let out = run_table(cfg)?;
    if let Some(path) = &cfg.out {
        out.table.write(path)?;
    }
    if let Some(path) = &cfg.svg {
        std::fs::write(path, svg::line_plot(&out.table, &out.plot))?;
    }
    Ok(out.table)
}

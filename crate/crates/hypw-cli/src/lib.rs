//! Scenario runner and report emitters for the `hypw` command-line tool.
//!
//! A scenario is a JSON file naming a list of stages (`build`, `solve`,
//! `glue`, `transform`, `analyze`, `rena`, `bubble-scan`).  Stages produce
//! named artifacts that later stages consume, and write their reports into
//! one output directory together with a `manifest.json` of content hashes.
//! The subcommands of the binary are one-stage scenarios.

// `!(x > 0.0)` rejects NaN inputs along with out-of-range ones.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod canonical;
pub mod export;
pub mod run;
pub mod scenario;

pub use export::{export_report, Format, Report, SweepRow};
pub use run::{run_scenario, Manifest};
pub use scenario::{Overrides, Scenario, Stage};

/// Errors of the runner, each with a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{pointer}: {message}")]
    Validation { pointer: String, message: String },
    #[error("{pointer}: unknown stage \"{name}\" (expected one of: {})", scenario::STAGE_NAMES.join(", "))]
    UnknownStage { pointer: String, name: String },
    #[error("stage {index} ({stage}) failed: {message}")]
    Stage { index: usize, stage: String, message: String },
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// `2` for invalid scenarios, `1` for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation { .. } | CliError::UnknownStage { .. } => 2,
            CliError::Stage { .. } | CliError::Io(_) => 1,
        }
    }
}

/// Environment variable capping the worker threads.
pub const THREADS_VAR: &str = "HYPW_THREADS";

/// Sizes the global worker pool from `HYPW_THREADS` when set.  Returns the
/// cap that was applied.
pub fn configure_threads() -> Result<Option<usize>, String> {
    let Ok(v) = std::env::var(THREADS_VAR) else { return Ok(None) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_VAR} must be a positive integer, got \"{v}\""))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    Ok(Some(n))
}

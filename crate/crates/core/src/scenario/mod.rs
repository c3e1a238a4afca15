//! Scenario runner: resolves a config, evaluates every sweep point on a
//! worker pool and writes grid-ordered CSV files plus a JSON manifest.

mod config;
mod output;
mod run;

pub use config::{
    validate_config, validate_config_with, CoherenceConfig, ConfigIssue, FieldConfig, FitSettings,
    McSettings, Overrides, ScenarioConfig, ScenarioKind, SensitivityConfig, SensorConfig,
    SequenceConfig, SequenceSpec, SweepConfig,
};
pub use output::{format_number, Table};
pub use run::{evaluate, RunOutput};

use std::path::PathBuf;

use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<ConfigIssue>),
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Model(#[from] crate::Error),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl ScenarioError {
    pub fn kind(&self) -> &'static str {
        match self {
            ScenarioError::Parse(_) => "parse",
            ScenarioError::Invalid(_) => "invalid-config",
            ScenarioError::Io { .. } => "io",
            ScenarioError::Model(_) => "model",
            ScenarioError::Pool(_) => "pool",
        }
    }

    /// Machine-readable form printed by the binary on failure.
    pub fn to_json(&self) -> Value {
        let mut v = json!({ "error": self.kind(), "message": self.to_string() });
        if let ScenarioError::Invalid(issues) = self {
            v["issues"] = serde_json::to_value(issues).unwrap_or(Value::Null);
        }
        v
    }
}

/// Paths written by one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
}

/// Evaluates `config` on a pool of `threads` workers (all cores when `None`)
/// and writes its outputs under `config.out_dir`.
pub fn run_scenario(
    config: &ScenarioConfig,
    threads: Option<usize>,
) -> Result<RunSummary, ScenarioError> {
    let output = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| ScenarioError::Pool(e.to_string()))?
            .install(|| evaluate(config))?,
        None => evaluate(config)?,
    };
    output::write_run(config, &output)
}

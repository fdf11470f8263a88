use std::path::PathBuf;

use fbs_core::{ScenarioConfig, SolverOptions};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Provenance of one CLI invocation.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the canonical TOML of the scenario as run.
    pub scenario_digest: String,
    pub seed: u64,
    pub solver: SolverOptions,
    pub version: String,
    pub runtime_seconds: f64,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, config: &ScenarioConfig) -> Self {
        Self {
            command: command.to_string(),
            scenario_digest: scenario_digest(config),
            seed: config.rng_seed,
            solver: config.solver.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            runtime_seconds: 0.0,
            outputs: Vec::new(),
        }
    }
}

pub fn scenario_digest(config: &ScenarioConfig) -> String {
    hex::encode(Sha256::digest(config.to_toml().as_bytes()))
}

//! Run manifests: what ran, on which inputs, with which settings.
//!
//! Two copies are emitted per command. The one embedded in each result file
//! omits the timing fields, so result files are byte-identical across reruns
//! with the same inputs and seed; the standalone manifest.json carries the
//! start time and duration as well.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::run::Failure;
use uclf_core::sampler::SamplerConfig;

#[derive(Serialize, Clone)]
pub struct ConfigEcho {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adjust: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerConfig>,
}

#[derive(Serialize, Clone)]
pub struct Manifest {
    pub command: String,
    pub tool_version: String,
    /// Input path -> SHA-256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    pub config: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub started_utc: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<u64>,
}

impl Manifest {
    pub fn new(command: &str, config: ConfigEcho) -> Self {
        Manifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: BTreeMap::new(),
            config,
            started_utc: None,
            duration_ms: None,
        }
    }

    /// Record an input file's digest; call once per input, before any
    /// expensive work, so a vanished file fails fast.
    pub fn add_input(&mut self, path: &Path) -> Result<(), Failure> {
        let bytes = fs::read(path)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.inputs.insert(path.display().to_string(), hex);
        Ok(())
    }

    /// Timed variant for the standalone manifest.json.
    pub fn with_timing(&self, started: chrono::DateTime<chrono::Utc>) -> Self {
        let mut m = self.clone();
        m.started_utc = Some(started.format("%Y-%m-%dT%H:%M:%SZ").to_string());
        m.duration_ms = Some(
            chrono::Utc::now()
                .signed_duration_since(started)
                .num_milliseconds()
                .max(0) as u64,
        );
        m
    }
}

//! Run manifests: enough to replay any CLI invocation.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    /// SHA-256 of the effective configuration as compact JSON.
    pub config_hash: String,
    pub seed: Option<u64>,
    /// SHA-256 of the input file bytes, if the command read one.
    pub input_digest: Option<String>,
    pub tool_version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    pub fn new<C: Serialize>(
        command_line: Vec<String>,
        config: &C,
        seed: Option<u64>,
        input: Option<&[u8]>,
        started_unix: f64,
    ) -> Result<Self> {
        let config_json = serde_json::to_string(config)?;
        Ok(RunManifest {
            command_line,
            config_hash: sha256_hex(config_json.as_bytes()),
            seed,
            input_digest: input.map(sha256_hex),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix,
            finished_unix: unix_now(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

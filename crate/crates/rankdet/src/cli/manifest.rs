//! JSON run manifests written next to every CLI artifact.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A record of one CLI invocation, written as `<out>.manifest.json`.
///
/// Everything except `timestamp_unix` is a pure function of the
/// command arguments, so two runs with the same arguments produce
/// manifests that differ only in that one field (and data outputs
/// that are byte-identical).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Wall-clock seconds since the Unix epoch at invocation time.
    pub timestamp_unix: u64,
    /// Seeds the command consumed, in consumption order.
    pub seeds: Vec<u64>,
    /// Resolved parameters, including calibrated values.
    pub params: serde_json::Value,
}

impl RunManifest {
    pub fn for_command(command: &str, params: serde_json::Value, seeds: Vec<u64>) -> Self {
        let timestamp_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunManifest {
            tool: "rankdet".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            timestamp_unix,
            seeds,
            params,
        }
    }

    /// Path of the sidecar manifest for a given output file.
    pub fn sidecar_path(out: &Path) -> PathBuf {
        let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
        name.push(".manifest.json");
        out.with_file_name(name)
    }

    pub fn write_sidecar(&self, out: &Path) -> Result<()> {
        self.write(&Self::sidecar_path(out))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidInput(format!("serialize manifest: {e}")))?;
        std::fs::write(path, json + "\n")
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            offset: e.column(),
            message: format!("{}: {e}", path.display()),
        })
    }
}

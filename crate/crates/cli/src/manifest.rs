use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

/// Record of one command invocation, written next to its outputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Complete configuration after defaults; accepted back as a config.
    pub resolved_config: Value,
    pub seed: u64,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<PathBuf>,
    pub version: String,
    pub threads: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
}

pub struct Recorder {
    command: String,
    started: DateTime<Utc>,
}

fn stamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl Recorder {
    pub fn start(command: &str) -> Self {
        Self {
            command: command.to_string(),
            started: Utc::now(),
        }
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    /// Checks that every output exists and writes the manifest to `path`.
    pub fn finish(
        self,
        path: &Path,
        resolved: &impl Serialize,
        seed: u64,
        outputs: Vec<PathBuf>,
        failures: Vec<String>,
    ) -> Result<(), CliError> {
        if let Some(missing) = outputs.iter().find(|p| !p.exists()) {
            return Err(CliError::Io(format!("output {} was not written", missing.display())));
        }
        let manifest = RunManifest {
            command: self.command,
            resolved_config: serde_json::to_value(resolved)
                .map_err(|e| CliError::Config(e.to_string()))?,
            seed,
            started: stamp(self.started),
            finished: stamp(Utc::now()),
            outputs,
            version: env!("CARGO_PKG_VERSION").to_string(),
            threads: rayon::current_num_threads(),
            failures,
        };
        write_json(path, &manifest)
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path.display(), e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    std::io::Write::write_all(&mut w, b"\n").map_err(|e| CliError::io(path.display(), e))?;
    std::io::Write::flush(&mut w).map_err(|e| CliError::io(path.display(), e))
}

/// `out.json` -> `out.<suffix>`, next to the primary output.
pub fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    out.with_extension(suffix)
}

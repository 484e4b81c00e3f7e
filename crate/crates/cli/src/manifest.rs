//! Run manifests: every file-producing invocation records its full command
//! line, resolved parameters and seeds, and SHA-256 digests of all inputs
//! and outputs. Reruns with matching input digests, parameters, and seeds
//! reproduce the outputs byte for byte (the manifest itself carries wall
//! clock timestamps and is not part of that guarantee).

use std::io::Read;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use davir_core::{Error, Result};
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub toolkit_version: &'static str,
    pub subcommand: String,
    pub command: Vec<String>,
    /// Every resolved parameter, including nondeterminism knobs such as
    /// worker counts and resample counts.
    pub parameters: Map<String, Value>,
    pub seeds: Map<String, Value>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn sha256_file(path: &Path) -> Result<String> {
    let mut file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("{:x}", hasher.finalize()))
}

impl RunManifest {
    pub fn begin(subcommand: &str) -> Self {
        RunManifest {
            toolkit_version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            command: std::env::args().collect(),
            parameters: Map::new(),
            seeds: Map::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started_unix_ms: now_ms(),
            finished_unix_ms: 0,
        }
    }

    pub fn param(&mut self, name: &str, value: impl Into<Value>) -> &mut Self {
        self.parameters.insert(name.to_string(), value.into());
        self
    }

    pub fn seed(&mut self, name: &str, value: u64) -> &mut Self {
        self.seeds.insert(name.to_string(), Value::from(value));
        self
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self> {
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(self)
    }

    pub fn output(&mut self, path: &Path) -> Result<&mut Self> {
        self.outputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(self)
    }

    /// Stamp the end time and write `<primary_output>.manifest.json`.
    pub fn finish(mut self, primary_output: &Path) -> Result<()> {
        self.finished_unix_ms = now_ms();
        let mut name = primary_output.as_os_str().to_owned();
        name.push(".manifest.json");
        let rendered = serde_json::to_string_pretty(&self).expect("manifest serializes");
        crate::output::write_atomic(Path::new(&name), rendered.as_bytes())
    }
}

//! Run manifests: what was run, with which settings, on which inputs.

use std::fs::File;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: Option<u64>,
    pub settings: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    /// Wall-clock fields; everything else is reproducible.
    pub started_unix_seconds: u64,
    pub elapsed_seconds: f64,
}

pub fn sha256_file(path: &Path) -> Result<InputDigest> {
    let wrap = |source: io::Error| CliError::File {
        path: path.to_path_buf(),
        source,
    };
    let mut file = File::open(path).map_err(wrap)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let got = file.read(&mut buf).map_err(wrap)?;
        if got == 0 {
            break;
        }
        hasher.update(&buf[..got]);
        bytes += got as u64;
    }
    Ok(InputDigest {
        path: path.display().to_string(),
        bytes,
        sha256: format!("{:x}", hasher.finalize()),
    })
}

/// Collects inputs and outputs while a command runs.
pub struct Recorder {
    command: String,
    seed: Option<u64>,
    settings: serde_json::Value,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    started: SystemTime,
    clock: Instant,
}

impl Recorder {
    pub fn new(command: &str, seed: Option<u64>, settings: serde_json::Value) -> Self {
        Recorder {
            command: command.to_string(),
            seed,
            settings,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: SystemTime::now(),
            clock: Instant::now(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Hashes the inputs and writes the manifest as pretty JSON.
    pub fn write(self, path: &Path) -> Result<()> {
        let inputs = self
            .inputs
            .iter()
            .map(|p| sha256_file(p))
            .collect::<Result<Vec<_>>>()?;
        let manifest = Manifest {
            tool: "sspmi",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            seed: self.seed,
            settings: self.settings,
            inputs,
            outputs: self
                .outputs
                .iter()
                .map(|p| p.display().to_string())
                .collect(),
            started_unix_seconds: self
                .started
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            elapsed_seconds: self.clock.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(path, text + "\n").map_err(|source| CliError::File {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// `<output>.manifest.json` next to a command's main output.
pub fn manifest_path_for(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc.txt");
        std::fs::write(&p, b"abc").unwrap();
        let d = sha256_file(&p).unwrap();
        assert_eq!(d.bytes, 3);
        assert_eq!(
            d.sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(
            manifest_path_for(Path::new("out/m.tsv")),
            PathBuf::from("out/m.tsv.manifest.json")
        );
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CliError;

/// Git-style object hash: sha256 over `blob <len>\0` followed by the bytes.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub hash: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self { path: path.display().to_string(), hash: content_hash(&bytes) })
    }
}

/// Record of one artifact-producing command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: Option<String>,
    pub seeds: Vec<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub duration_seconds: f64,
}

/// Collects inputs and outputs while a command runs.
pub struct Recorder {
    command: String,
    out: PathBuf,
    started: Instant,
    pub config_hash: Option<String>,
    pub seeds: Vec<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Recorder {
    pub fn new(command: &str, out: &Path) -> Self {
        Self {
            command: command.to_string(),
            out: out.to_path_buf(),
            started: Instant::now(),
            config_hash: None,
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    /// Path of `name` inside the output directory, created on demand.
    pub fn out_path(&self, name: impl AsRef<Path>) -> Result<PathBuf, CliError> {
        let p = self.out.join(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        Ok(p)
    }

    pub fn write(&mut self, name: impl AsRef<Path>, bytes: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        let p = self.out_path(name)?;
        fs::write(&p, bytes).map_err(|e| CliError::io(&p, e))?;
        self.outputs.push(p.clone());
        Ok(p)
    }

    /// Registers a file some other routine already wrote.
    pub fn wrote(&mut self, path: PathBuf) {
        self.outputs.push(path);
    }

    pub fn write_json(&mut self, name: impl AsRef<Path>, value: &impl Serialize) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    /// Writes `<command>.manifest.json` into the output directory.
    pub fn finish(self) -> Result<RunManifest, CliError> {
        let digests = |paths: &[PathBuf]| paths.iter().map(|p| FileDigest::of(p)).collect::<Result<Vec<_>, _>>();
        let manifest = RunManifest {
            command: self.command.clone(),
            config_hash: self.config_hash.clone(),
            seeds: self.seeds.clone(),
            inputs: digests(&self.inputs)?,
            outputs: digests(&self.outputs)?,
            duration_seconds: self.started.elapsed().as_secs_f64(),
        };
        let p = self.out_path(format!("{}.manifest.json", self.command))?;
        fs::write(&p, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| CliError::io(&p, e))?;
        Ok(manifest)
    }
}

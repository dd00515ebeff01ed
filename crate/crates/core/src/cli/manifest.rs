use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::synthetic;

use super::RunConfig;

#[derive(Debug, Clone, Serialize)]
pub struct RngInfo {
    pub algorithm: &'static str,
    pub streams: BTreeMap<&'static str, u64>,
    pub validation_split: &'static str,
}

impl Default for RngInfo {
    fn default() -> Self {
        Self {
            algorithm: synthetic::RNG_ALGORITHM,
            streams: BTreeMap::from([
                ("features", synthetic::STREAM_FEATURES),
                ("assignment", synthetic::STREAM_ASSIGNMENT),
                ("noise", synthetic::STREAM_NOISE),
                ("evaluation", synthetic::STREAM_EVALUATION),
            ]),
            validation_split: crate::tree::VALIDATION_RNG,
        }
    }
}

/// A frame that was not fitted, and why.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedEntry {
    pub frame: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub millis: f64,
}

/// Record of one invocation, written as `manifest_<command>.json` in the
/// output directory on every exit path.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub exit_code: i32,
    pub error: Option<String>,
    pub config: RunConfig,
    pub threads: usize,
    pub rng: RngInfo,
    /// sha256 of every input file read.
    pub inputs: BTreeMap<String, String>,
    /// sha256 of every output file written.
    pub outputs: BTreeMap<String, String>,
    pub row_counts: BTreeMap<String, usize>,
    pub skipped_frames: Vec<SkippedEntry>,
    pub timings: Vec<StageTiming>,
}

impl RunManifest {
    pub fn new(command: &str, argv: Vec<String>, config: RunConfig, threads: usize) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            argv,
            exit_code: 0,
            error: None,
            config,
            threads,
            rng: RngInfo::default(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            row_counts: BTreeMap::new(),
            skipped_frames: Vec::new(),
            timings: Vec::new(),
        }
    }

    pub fn record_input(&mut self, path: &Path) {
        match sha256_file(path) {
            Ok(h) => {
                self.inputs.insert(path.display().to_string(), h);
            }
            Err(e) => log::warn!("cannot hash input {}: {e}", path.display()),
        }
    }

    pub fn record_output(&mut self, path: &Path, bytes: &[u8]) {
        self.outputs.insert(
            path.display().to_string(),
            hex::encode(Sha256::digest(bytes)),
        );
    }

    pub fn count(&mut self, key: &str, n: usize) {
        self.row_counts.insert(key.to_string(), n);
    }

    /// Runs `f` as a named stage and records its wall-clock time.
    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> T) -> T {
        let start = Instant::now();
        let out = f(self);
        self.timings.push(StageTiming {
            stage: name.to_string(),
            millis: start.elapsed().as_secs_f64() * 1e3,
        });
        out
    }

    pub fn path(out: &Path, command: &str) -> PathBuf {
        out.join(format!("manifest_{command}.json"))
    }
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    let mut file = std::fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

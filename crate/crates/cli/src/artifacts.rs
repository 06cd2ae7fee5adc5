//! Run records, content hashing, and deterministic artifact writers.
//!
//! Every command writes `<out_dir>/<command>.run.json` recording the hash
//! of its effective configuration, the hashes of its input files, and the
//! toolkit version. JSON artifacts owned by the CLI embed the same record
//! under a `run` key, so downstream commands can check lineage.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::errors::{io_error, CliError};

/// Lineage stamp shared by all artifacts of one command invocation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub config_hash: String,
    pub input_hashes: BTreeMap<String, String>,
    pub toolkit_version: String,
}

impl RunRecord {
    /// Hash the effective (post-override) parameters of a command.
    pub fn new<P: Serialize>(command: &str, params: &P) -> Self {
        let canonical = serde_json::to_string(params).expect("params serialize");
        let config_hash = hex::encode(Sha256::digest(canonical.as_bytes()));
        RunRecord {
            command: command.to_string(),
            config_hash,
            input_hashes: BTreeMap::new(),
            toolkit_version: bias_refinery_core::TOOLKIT_VERSION.to_string(),
        }
    }

    /// Record the content hash of one input file under a stable name.
    pub fn with_input(mut self, name: &str, path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
        self.input_hashes
            .insert(name.to_string(), hex::encode(Sha256::digest(&bytes)));
        Ok(self)
    }

    /// Write `<out_dir>/<command>.run.json`.
    pub fn save(&self, out_dir: &Path) -> Result<PathBuf, CliError> {
        let path = out_dir.join(format!("{}.run.json", self.command));
        write_json(&path, self)?;
        Ok(path)
    }
}

/// Create the output directory, failing with a config error when the
/// location is not writable.
pub fn ensure_out_dir(out_dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::config(format!("output dir {}: {e}", out_dir.display())))
}

/// Pretty JSON with a trailing newline; byte-identical across reruns for
/// identical values.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(value).expect("value serializes");
    std::fs::write(path, json + "\n").map_err(|e| io_error(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let raw = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&raw)
        .map_err(|e| CliError::data(format!("{}: invalid JSON: {e}", path.display())))
}

/// One JSON value per line.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).expect("item serializes");
        writeln!(w, "{line}").map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_error(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| {
            CliError::data(format!("{} line {}: {e}", path.display(), idx + 1))
        })?;
        out.push(item);
    }
    Ok(out)
}

/// Line-at-a-time JSONL writer that flushes after every record, used for
/// checkpointable audit logs.
pub struct JsonlSink {
    path: PathBuf,
    writer: BufWriter<File>,
}

impl JsonlSink {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        let file = File::create(path).map_err(|e| io_error(path, e))?;
        Ok(JsonlSink {
            path: path.to_path_buf(),
            writer: BufWriter::new(file),
        })
    }

    pub fn write<T: Serialize>(&mut self, item: &T) -> Result<(), CliError> {
        let line = serde_json::to_string(item).expect("item serializes");
        writeln!(self.writer, "{line}").map_err(|e| io_error(&self.path, e))?;
        self.writer.flush().map_err(|e| io_error(&self.path, e))
    }
}

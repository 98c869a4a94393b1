use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{read_instance, Instance, INSTANCE_EXT};

pub const ORACLE_SCHEMA: &str = "oracle-results/1";
pub const RESULTS_SCHEMA: &str = "dlts-results/1";
pub const LEADERBOARD_SCHEMA: &str = "tune-leaderboard/1";
pub const EVAL_SCHEMA: &str = "gap-table/1";
pub const MANIFEST_VERSION: u32 = 1;

/// Everything needed to repeat a command: the effective arguments (after
/// config-file overrides) plus digests of what it wrote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub manifest_version: u32,
    pub tool_version: String,
    pub command: String,
    pub args: serde_json::Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<PathBuf>,
    /// SHA-256 of each output file.
    pub outputs: BTreeMap<PathBuf, String>,
    pub formats: BTreeMap<String, String>,
    pub notes: BTreeMap<String, serde_json::Value>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

impl RunManifest {
    pub(crate) fn new(command: &str, args: serde_json::Value) -> Self {
        let formats = [
            ("instance", "CPMP v1".to_string()),
            ("solution", "CPMPSOL v1".to_string()),
            ("weights", crate::nn::WEIGHTS_VERSION.to_string()),
            ("oracle_csv", ORACLE_SCHEMA.to_string()),
            ("results_csv", RESULTS_SCHEMA.to_string()),
            ("leaderboard_csv", LEADERBOARD_SCHEMA.to_string()),
            ("gap_csv", EVAL_SCHEMA.to_string()),
            (
                "train_report_csv",
                crate::train::TRAIN_REPORT_SCHEMA.to_string(),
            ),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        RunManifest {
            manifest_version: MANIFEST_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            args,
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: BTreeMap::new(),
            formats,
            notes: BTreeMap::new(),
            started_unix: unix_now(),
            finished_unix: 0,
        }
    }

    pub(crate) fn output(&mut self, path: &Path) -> Result<()> {
        self.outputs.insert(path.to_path_buf(), sha256_file(path)?);
        Ok(())
    }

    pub(crate) fn write(mut self, path: &Path) -> Result<()> {
        self.finished_unix = unix_now();
        let json = serde_json::to_string_pretty(&self).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(path, json + "\n")?;
        Ok(())
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<RunManifest> {
    let path = path.as_ref();
    let manifest: RunManifest = serde_json::from_slice(&fs::read(path)?)
        .map_err(|e| Error::parse(e.line(), e.to_string()).with_path(path))?;
    if manifest.manifest_version != MANIFEST_VERSION {
        return Err(Error::VersionMismatch {
            found: manifest.manifest_version,
            expected: MANIFEST_VERSION,
        });
    }
    Ok(manifest)
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub(crate) fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

/// Instance files named directly or found (non-recursively, by extension)
/// in the given directories, ordered by path within each directory.
pub fn load_instances(paths: &[PathBuf]) -> Result<Vec<Instance>> {
    let mut files = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(path)?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            found.retain(|p| p.extension().is_some_and(|e| e == INSTANCE_EXT));
            found.sort();
            files.extend(found);
        } else {
            files.push(path.clone());
        }
    }
    let instances: Vec<Instance> = files.iter().map(read_instance).collect::<Result<_>>()?;
    let mut seen = HashSet::new();
    for inst in &instances {
        if !seen.insert(inst.id.as_str()) {
            return Err(Error::Config(format!("duplicate instance id {}", inst.id)));
        }
    }
    Ok(instances)
}

/// Writes `#schema=<schema>`, a header and the rows.
pub(crate) fn write_csv<T: Serialize>(path: &Path, schema: &str, rows: &[T]) -> Result<()> {
    let mut file = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(file, "#schema={schema}")?;
    let mut w = csv::Writer::from_writer(file);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn split_schema(s: &str) -> Option<(&str, u32)> {
    let (name, version) = s.rsplit_once('/')?;
    Some((name, version.parse().ok()?))
}

/// Reads rows from a CSV written by [`write_csv`], checking its schema.
pub(crate) fn read_csv<T: DeserializeOwned>(path: &Path, schema: &str) -> Result<Vec<T>> {
    let text = fs::read_to_string(path)?;
    let (first, rest) = text.split_once('\n').unwrap_or((text.as_str(), ""));
    let found = first
        .trim_end()
        .strip_prefix("#schema=")
        .and_then(split_schema)
        .ok_or_else(|| Error::parse(1, "missing #schema= line").with_path(path))?;
    let (name, version) = split_schema(schema).expect("schema constants are well formed");
    if found.0 != name {
        return Err(
            Error::parse(1, format!("expected a {name} file, found {}", found.0)).with_path(path),
        );
    }
    if found.1 != version {
        return Err(Error::VersionMismatch {
            found: found.1,
            expected: version,
        });
    }
    let mut reader = csv::Reader::from_reader(rest.as_bytes());
    reader
        .deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| Error::parse(i + 3, e.to_string()).with_path(path)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub id: String,
    pub length: Option<usize>,
    pub proven: bool,
    pub nodes: u64,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub id: String,
    pub class: String,
    pub moves: Option<usize>,
    pub nodes: u64,
    pub policy_queries: u64,
    pub value_queries: u64,
    pub time: f64,
    pub solved: bool,
}

pub fn read_oracle_csv(path: impl AsRef<Path>) -> Result<Vec<OracleRow>> {
    read_csv(path.as_ref(), ORACLE_SCHEMA)
}

pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    read_csv(path.as_ref(), RESULTS_SCHEMA)
}

/// Sibling path with `suffix` appended to the file name.
pub(crate) fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

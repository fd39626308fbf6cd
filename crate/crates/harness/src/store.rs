//! Append-only campaign results: one JSON record per line in `records.jsonl`.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use rvvprobe_core::PartialCounts;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::campaign::Mode;

pub const SCHEMA_VERSION: u32 = 1;
pub const RECORDS_FILE: &str = "records.jsonl";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}:{line}: schema version {found} is newer than supported version {SCHEMA_VERSION}")]
    Version { path: PathBuf, line: usize, found: u32 },
}

/// One (app, compiler, mode, LMUL) measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignRecord {
    pub schema_version: u32,
    pub id: String,
    pub app: String,
    pub compiler: String,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lmul: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub platform: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    pub runs: u32,
    /// Mean over runs.
    pub runtime_ns: Option<f64>,
    pub runtime_min_ns: Option<u64>,
    pub runtime_max_ns: Option<u64>,
    /// Mean over runs, restricted to calibrated events.
    pub counts: PartialCounts,
    /// Id of the record this one is normalised against.
    pub baseline: String,
    pub speedup: Option<f64>,
    pub reduction: Option<f64>,
    pub valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Seconds since the Unix epoch.
    pub recorded_at: u64,
}

impl CampaignRecord {
    pub fn is_baseline(&self) -> bool {
        self.id == self.baseline
    }
}

#[derive(Debug, Clone)]
pub struct ResultsStore {
    dir: PathBuf,
}

impl ResultsStore {
    pub fn new(dir: impl Into<PathBuf>) -> ResultsStore {
        ResultsStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn records_path(&self) -> PathBuf {
        self.dir.join(RECORDS_FILE)
    }

    /// Append all records with a single write so a batch lands whole.
    pub fn append(&self, records: &[CampaignRecord]) -> Result<(), StoreError> {
        let path = self.records_path();
        let io = |source| StoreError::Io {
            path: path.clone(),
            source,
        };
        std::fs::create_dir_all(&self.dir).map_err(io)?;
        let mut buf = String::new();
        for r in records {
            buf.push_str(&serde_json::to_string(r).expect("record serializes"));
            buf.push('\n');
        }
        let mut f = OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
        f.write_all(buf.as_bytes()).map_err(io)?;
        f.sync_data().map_err(io)
    }

    /// Every record in file order. A missing file reads as empty.
    pub fn load(&self) -> Result<Vec<CampaignRecord>, StoreError> {
        let path = self.records_path();
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(source) => return Err(StoreError::Io { path, source }),
        };
        parse_records(&text, &path)
    }

    /// The most recent record for each id, in order of first appearance.
    pub fn latest(&self) -> Result<Vec<CampaignRecord>, StoreError> {
        Ok(latest_by_id(self.load()?))
    }
}

pub fn parse_records(text: &str, path: &Path) -> Result<Vec<CampaignRecord>, StoreError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| StoreError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        let found = value.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if found > SCHEMA_VERSION {
            return Err(StoreError::Version {
                path: path.to_path_buf(),
                line: i + 1,
                found,
            });
        }
        out.push(serde_json::from_value(value).map_err(|e| StoreError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn latest_by_id(records: Vec<CampaignRecord>) -> Vec<CampaignRecord> {
    let mut order: Vec<String> = Vec::new();
    let mut map = std::collections::HashMap::new();
    for r in records {
        if !map.contains_key(&r.id) {
            order.push(r.id.clone());
        }
        map.insert(r.id.clone(), r);
    }
    order.into_iter().filter_map(|id| map.remove(&id)).collect()
}

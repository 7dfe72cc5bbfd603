//! Append-only JSONL log of handled requests.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::{Assembly, PipelineResult};

#[derive(Debug, Error)]
pub enum LogError {
    #[error("interaction log {path} unavailable: {source}")]
    SinkUnavailable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One line of the log. Field names are part of the file format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionRecord {
    /// RFC 3339 UTC timestamp with millisecond precision.
    pub ts: String,
    pub input: String,
    pub linked: Vec<String>,
    pub packages: Vec<String>,
    pub oov: Vec<String>,
}

impl InteractionRecord {
    pub fn from_result(result: &PipelineResult) -> Self {
        let packages = match &result.assembly {
            Assembly::Assembled(a) => a.matched_packages.iter().map(|p| p.id.clone()).collect(),
            Assembly::EmptyLinkSet => Vec::new(),
        };
        Self {
            ts: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            input: result.input_text.clone(),
            linked: result.linked_entities.iter().map(|l| l.entity_id.clone()).collect(),
            packages,
            oov: result.oov_rejections.iter().map(|r| r.rejected_word.clone()).collect(),
        }
    }
}

/// Position of an acknowledged record in the log's total order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Ack {
    pub sequence: u64,
}

#[derive(Debug)]
pub struct InteractionLog {
    path: PathBuf,
    sequence: Mutex<u64>,
}

impl InteractionLog {
    /// The file is opened per append, so a sink that becomes unwritable later
    /// is reported on that append rather than here.
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            sequence: Mutex::new(0),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Serialize `record` as one line and append it with a single write.
    pub fn append(&self, record: &InteractionRecord) -> Result<Ack, LogError> {
        let mut line = serde_json::to_string(record).expect("record serializes");
        line.push('\n');
        let unavailable = |source| LogError::SinkUnavailable {
            path: self.path.clone(),
            source,
        };
        let mut sequence = self.sequence.lock().unwrap_or_else(|e| e.into_inner());
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(unavailable)?;
        file.write_all(line.as_bytes()).map_err(unavailable)?;
        *sequence += 1;
        Ok(Ack { sequence: *sequence })
    }
}

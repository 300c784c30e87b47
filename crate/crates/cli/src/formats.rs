//! On-disk record types and their readers and writers.
//!
//! JSON files are pretty-printed with a trailing newline; JSONL files hold
//! one compact object per line; CSV files have a header row and LF endings.

use crate::error::CliError;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use sttpp::hawkes::{break_ties, Event, HawkesParams};
use sttpp::{Embedding, Matrix};

/// One input document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beat: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<usize>,
}

/// A sparse TF-IDF vector with the document's metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BowRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beat: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<usize>,
    pub p: usize,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl BowRecord {
    pub fn from_dense(id: String, time: Option<f64>, beat: Option<usize>, category: Option<usize>, dense: &[f64]) -> Self {
        let (indices, values) = dense.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(l, &v)| (l, v)).unzip();
        Self {
            id,
            time,
            beat,
            category,
            p: dense.len(),
            indices,
            values,
        }
    }

    pub fn dense(&self) -> Result<Vec<f64>, CliError> {
        if self.indices.len() != self.values.len() {
            return Err(CliError::data(format!("document {}: indices and values differ in length", self.id)));
        }
        let mut out = vec![0.0; self.p];
        for (&l, &v) in self.indices.iter().zip(&self.values) {
            let slot = out
                .get_mut(l)
                .ok_or_else(|| CliError::data(format!("document {}: keyword index {l} >= {}", self.id, self.p)))?;
            *slot = v;
        }
        Ok(out)
    }
}

pub fn bits_string(h: &Embedding) -> String {
    h.iter().map(|b| if b { '1' } else { '0' }).collect()
}

pub fn parse_bits(s: &str) -> Result<Embedding, CliError> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(CliError::data(format!("embedding contains {other:?}; expected only 0 and 1"))),
        })
        .collect::<Result<Vec<bool>, _>>()
        .map(Embedding::from_bools)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingRecord {
    pub event_id: String,
    pub bits: String,
}

/// One point-process event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventRecord {
    pub id: String,
    /// Days since the start of the window.
    pub time: f64,
    pub beat: usize,
    pub bits: String,
}

impl EventRecord {
    pub fn from_event(e: &Event) -> Self {
        Self {
            id: e.id.clone(),
            time: e.t,
            beat: e.beat,
            bits: bits_string(&e.embedding),
        }
    }
}

/// Fitted model; `a` is row-major `d × d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub d: usize,
    pub m: usize,
    pub beta: f64,
    pub horizon: f64,
    pub mu: Vec<f64>,
    pub a: Vec<f64>,
    pub omega: Vec<String>,
    pub ll_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl ModelFile {
    pub fn params(&self) -> Result<HawkesParams, CliError> {
        let a = Matrix::from_row_major(self.d, self.d, self.a.clone())
            .ok_or_else(|| CliError::data(format!("model: A has {} entries, expected {}", self.a.len(), self.d * self.d)))?;
        Ok(HawkesParams::new(self.mu.clone(), a, self.beta, self.horizon)?)
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| CliError::data(format!("{}:{}: {e}", path.display(), n + 1)))?);
    }
    Ok(out)
}

/// Collects output files in memory and writes them under one directory.
pub struct OutDir {
    root: PathBuf,
    written: Vec<(String, Vec<u8>)>,
}

impl OutDir {
    pub fn new(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write_bytes(&mut self, name: &str, bytes: Vec<u8>) -> Result<(), CliError> {
        let path = self.root.join(name);
        std::fs::write(&path, &bytes).map_err(|e| CliError::io(&path, e))?;
        self.written.push((name.to_owned(), bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("plain data serialises");
        bytes.push(b'\n');
        self.write_bytes(name, bytes)
    }

    pub fn write_jsonl<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        let mut bytes = Vec::new();
        for row in rows {
            serde_json::to_writer(&mut bytes, row).expect("plain data serialises");
            bytes.push(b'\n');
        }
        self.write_bytes(name, bytes)
    }

    pub fn write_csv<R: IntoIterator<Item = Vec<String>>>(&mut self, name: &str, header: &[&str], rows: R) -> Result<(), CliError> {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let path = self.root.join(name);
        writer.write_record(header).map_err(|e| CliError::io(&path, e))?;
        for row in rows {
            writer.write_record(&row).map_err(|e| CliError::io(&path, e))?;
        }
        let bytes = writer.into_inner().map_err(|e| CliError::io(&path, e.error()))?;
        self.write_bytes(name, bytes)
    }

    pub fn written(&self) -> &[(String, Vec<u8>)] {
        &self.written
    }
}

/// Reads a CSV with the given leading header columns; extra columns are ignored.
pub fn read_csv(path: &Path, expected: &[&str]) -> Result<Vec<Vec<String>>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(std::io::BufReader::new(file));
    let header = reader.headers().map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let found: Vec<&str> = header.iter().take(expected.len()).collect();
    if found != expected {
        return Err(CliError::data(format!(
            "{}: header starts with {found:?}, expected {expected:?}",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        rows.push(record.iter().take(expected.len()).map(str::to_owned).collect());
    }
    Ok(rows)
}

/// Loads events, orders them by time and separates tied timestamps.
pub fn load_events(path: &Path, jitter: f64) -> Result<Vec<Event>, CliError> {
    let records: Vec<EventRecord> = read_jsonl(path)?;
    if records.is_empty() {
        return Err(CliError::data(format!("{}: no events", path.display())));
    }
    let mut events = Vec::with_capacity(records.len());
    for r in records {
        if !(r.time.is_finite() && r.time >= 0.0) {
            return Err(CliError::data(format!("event {} has invalid time {}", r.id, r.time)));
        }
        events.push(Event::new(r.id, r.time, r.beat, parse_bits(&r.bits)?));
    }
    // Stable sort keeps file order among equal times before jittering.
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    break_ties(&mut events, jitter);
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = events.iter().find(|e| !seen.insert(e.id.as_str())) {
        return Err(CliError::data(format!("duplicate event id {}", dup.id)));
    }
    Ok(events)
}

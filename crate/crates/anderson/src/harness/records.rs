//! Line-oriented run records: one JSON object per realization, keyed by the
//! config hash, with a terminal marker for crash-safe resumption and a merge
//! operation for manually sharded runs.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::harness::HarnessError;

/// One completed realization. `end` is the terminal marker: a line written
/// without it (or cut mid-write) is treated as partial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Config content hash; all records in a file must share it.
    pub config: String,
    /// Realization index (the RNG stream selector).
    pub index: u64,
    /// Library version that produced the record.
    pub version: String,
    /// Wall-clock time of the realization in milliseconds.
    pub elapsed_ms: u64,
    /// Experiment-specific payload (atoms, counts, residuals, ...).
    pub payload: serde_json::Value,
    /// Terminal marker; always true on a fully written record.
    pub end: bool,
}

impl RunRecord {
    pub fn new(config: &str, index: u64, elapsed_ms: u64, payload: serde_json::Value) -> Self {
        RunRecord {
            config: config.to_string(),
            index,
            version: env!("CARGO_PKG_VERSION").to_string(),
            elapsed_ms,
            payload,
            end: true,
        }
    }
}

/// Append records to `path`, one JSON object per line.
pub fn write_records(path: &Path, records: &[RunRecord]) -> Result<(), HarnessError> {
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| HarnessError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| HarnessError::io(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Read a record file. A damaged or unterminated FINAL line is dropped and
/// counted (crash recovery); damage anywhere else is an error.
pub fn read_records(path: &Path) -> Result<(Vec<RunRecord>, usize), HarnessError> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let reader = BufReader::new(file);
    let lines: Vec<String> = reader
        .lines()
        .collect::<Result<_, _>>()
        .map_err(|e| HarnessError::io(path, e))?;
    let mut records = Vec::with_capacity(lines.len());
    let mut dropped = 0usize;
    let last = lines.len().saturating_sub(1);
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RunRecord>(line) {
            Ok(r) if r.end => records.push(r),
            Ok(_) | Err(_) if i == last => dropped += 1,
            Ok(_) => {
                return Err(HarnessError::Record(format!(
                    "unterminated record at line {} of {}",
                    i + 1,
                    path.display()
                )))
            }
            Err(e) => {
                return Err(HarnessError::Record(format!(
                    "corrupt record at line {} of {}: {e}",
                    i + 1,
                    path.display()
                )))
            }
        }
    }
    Ok((records, dropped))
}

/// Truncate `path` to its valid prefix, dropping a partial final line.
/// Returns the number of surviving records.
pub fn repair(path: &Path) -> Result<usize, HarnessError> {
    let (records, dropped) = read_records(path)?;
    if dropped > 0 {
        let tmp = path.with_extension("repair.tmp");
        // rewrite-and-rename keeps the original intact on failure
        {
            let file = std::fs::File::create(&tmp).map_err(|e| HarnessError::io(&tmp, e))?;
            let mut w = std::io::BufWriter::new(file);
            for r in &records {
                serde_json::to_writer(&mut w, r)?;
                w.write_all(b"\n").map_err(|e| HarnessError::io(&tmp, e))?;
            }
            w.flush().map_err(|e| HarnessError::io(&tmp, e))?;
        }
        std::fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))?;
    }
    Ok(records.len())
}

/// Merge record sets from sharded runs of one config: hashes must agree and
/// realization indices must be disjoint. Output is sorted by index.
pub fn merge_records(shards: Vec<Vec<RunRecord>>) -> Result<Vec<RunRecord>, HarnessError> {
    let mut merged: Vec<RunRecord> = Vec::new();
    let mut hash: Option<String> = None;
    for shard in shards {
        for r in shard {
            match &hash {
                None => hash = Some(r.config.clone()),
                Some(h) if *h != r.config => {
                    return Err(HarnessError::HashMismatch(h.clone(), r.config.clone()))
                }
                _ => {}
            }
            merged.push(r);
        }
    }
    merged.sort_by_key(|r| r.index);
    for w in merged.windows(2) {
        if w[0].index == w[1].index {
            return Err(HarnessError::IndexCollision(w[0].index));
        }
    }
    Ok(merged)
}

/// File-level merge: read every input, merge, write to `output`.
pub fn merge_files(inputs: &[std::path::PathBuf], output: &Path) -> Result<usize, HarnessError> {
    let mut shards = Vec::with_capacity(inputs.len());
    for p in inputs {
        let (records, dropped) = read_records(p)?;
        if dropped > 0 {
            return Err(HarnessError::Record(format!(
                "{} has a partial final record; run repair first",
                p.display()
            )));
        }
        shards.push(records);
    }
    let merged = merge_records(shards)?;
    if output.exists() {
        return Err(HarnessError::Record(format!(
            "refusing to overwrite existing {}",
            output.display()
        )));
    }
    write_records(output, &merged)?;
    Ok(merged.len())
}

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::grid::Variant;
use crate::error::{Error, Result};
use crate::eval::MetricReport;

/// Metrics of one run with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub experiment: String,
    pub task: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    pub metrics: MetricReport,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub routes: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expert_short_circuits: Option<usize>,
    pub seeds: BTreeMap<String, u64>,
    pub corpus_hashes: BTreeMap<String, String>,
    pub config: RunConfig,
}

/// Per-epoch losses of one trained model with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub model: String,
    pub epoch_losses: Vec<f64>,
    pub examples: usize,
    /// Losses of a second tagger trained alongside (SRL argument tagger).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argument_epoch_losses: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heldout: Option<MetricReport>,
    pub seeds: BTreeMap<String, u64>,
    pub corpus_hashes: BTreeMap<String, String>,
    pub config: RunConfig,
}

/// `da-Hybrid-EL-CMP-logits_sum` and the like.
pub fn report_stem(task: &str, variant: Variant, method: Option<&str>) -> String {
    match method {
        Some(m) => format!("{task}-{}-{}", variant.name(), m.replace('+', "-")),
        None => format!("{task}-{}", variant.name()),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::invalid(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    for r in rows {
        let line = serde_json::to_string(r).map_err(|e| Error::invalid(e.to_string()))?;
        writeln!(f, "{line}").map_err(|e| Error::io(path, e))?;
    }
    f.flush().map_err(|e| Error::io(path, e))
}

/// Writes `<stem>.json` and the per-example log `<stem>.jsonl` into `dir`.
pub fn write_run<T: Serialize>(dir: &Path, stem: &str, report: &RunReport, log: &[T]) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = dir.join(format!("{stem}.json"));
    let jsonl = dir.join(format!("{stem}.jsonl"));
    write_json(&json, report)?;
    write_jsonl(&jsonl, log)?;
    Ok((json, jsonl))
}

//! Prediction files and their scoring against corpus files.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::data::load_one;
use super::grid::DaLogEntry;
use crate::corpus::{CompletionExample, DaExample, FieldMapping, SrlAnnotation, SrlExample};
use crate::error::{Error, Result};
use crate::eval::{Averaging, MetricReport, PredictedFrames, SrlScoring};
use crate::selection::align;
use crate::understanding::SrlFrame;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Completion,
    Da,
    Srl,
}

impl std::str::FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "completion" => Ok(Task::Completion),
            "da" => Ok(Task::Da),
            "srl" => Ok(Task::Srl),
            _ => Err(Error::Config(format!("unknown task `{s}` (completion, da or srl)"))),
        }
    }
}

/// A completion prediction; `index` points into the gold corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionRow {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    pub tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub posteriors: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
struct DaRow {
    #[serde(default)]
    index: Option<usize>,
    labels: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
struct SrlRow {
    #[serde(default)]
    index: Option<usize>,
    #[serde(default)]
    completed: Option<Vec<String>>,
    #[serde(default)]
    on_completed: bool,
    frames: Vec<RowFrame>,
}

/// Span frames as written by the grid, or tag sequences as in the corpus.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
enum RowFrame {
    Spans(SrlFrame),
    Tags(SrlAnnotation),
}

impl RowFrame {
    fn into_frame(self) -> SrlFrame {
        match self {
            RowFrame::Spans(f) => f,
            RowFrame::Tags(a) => a.to_frame(),
        }
    }
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Json {
                line: i + 1,
                message: format!("{}: {e}", path.display()),
            })
        })
        .collect()
}

/// Gold item of each prediction: by `index` when given, else by position.
fn gold_for<'a, G>(gold: &'a [G], index: Option<usize>, pos: usize) -> Result<&'a G> {
    let i = index.unwrap_or(pos);
    gold.get(i)
        .ok_or_else(|| Error::invalid(format!("prediction {pos} refers to gold example {i} of {}", gold.len())))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalOptions {
    pub averaging: Averaging,
    pub scoring: SrlScoring,
    pub per_example: bool,
}

/// Scores a prediction file (completion rows, or the run logs written by
/// the grid) against a corpus file.
pub fn evaluate_files(task: Task, pred: &Path, gold: &Path, opts: EvalOptions) -> Result<MetricReport> {
    let none = FieldMapping::default();
    match task {
        Task::Completion => {
            let rows: Vec<CompletionRow> = read_rows(pred)?;
            let (g, _) = load_one::<CompletionExample>(gold, &none)?;
            let refs = rows
                .iter()
                .enumerate()
                .map(|(k, r)| Ok(gold_for(&g, r.index, k)?.reference.clone()))
                .collect::<Result<Vec<_>>>()?;
            let hyps: Vec<Vec<String>> = rows.into_iter().map(|r| r.tokens).collect();
            MetricReport::completion(&hyps, &refs, opts.per_example)
        }
        Task::Da => {
            let rows: Vec<DaRow> = read_rows(pred)?;
            let (g, _) = load_one::<DaExample>(gold, &none)?;
            let mut pred_ids = Vec::new();
            let mut gold_ids = Vec::new();
            for (k, r) in rows.into_iter().enumerate() {
                gold_ids.push(gold_for(&g, r.index, k)?.labels.clone());
                let entry = DaLogEntry {
                    index: k,
                    utterance: String::new(),
                    completed: String::new(),
                    labels: r.labels,
                    route: None,
                };
                pred_ids.push(entry.label_ids()?);
            }
            MetricReport::dialog_acts(&pred_ids, &gold_ids, opts.averaging, opts.per_example)
        }
        Task::Srl => {
            let rows: Vec<SrlRow> = read_rows(pred)?;
            let (g, _) = load_one::<SrlExample>(gold, &none)?;
            let mut preds = Vec::new();
            let mut golds = Vec::new();
            for (k, r) in rows.into_iter().enumerate() {
                let ex = gold_for(&g, r.index, k)?;
                golds.push(ex.gold_frames());
                let frames: Vec<SrlFrame> = r.frames.into_iter().map(RowFrame::into_frame).collect();
                preds.push(match (r.on_completed, r.completed) {
                    (true, Some(c)) => PredictedFrames::Completed {
                        frames,
                        len: c.len(),
                        alignment: Some(align(&ex.utterance, &c)),
                    },
                    (true, None) => return Err(Error::invalid(format!("prediction {k} is on_completed without `completed` tokens"))),
                    (false, _) => PredictedFrames::Original(frames),
                });
            }
            MetricReport::srl(&preds, &golds, opts.scoring, opts.per_example)
        }
    }
}

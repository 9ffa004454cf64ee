//! Closed label inventories. The same lists ship as text files under
//! `data/labels/` (one label per line, id = zero-based line number).

use crate::error::{Error, Result};

/// 23 dialog acts. `incomplete` stands in for the catch-all "other" act so
/// that the default non-completable set can name it.
pub const DIALOG_ACTS: [&str; 23] = [
    "statement",
    "opinion",
    "comment",
    "positive_answer",
    "negative_answer",
    "other_answers",
    "open_question",
    "opinion_question",
    "yes_no_question",
    "command",
    "dev_command",
    "appreciation",
    "hold",
    "nonsense",
    "complaint",
    "apology",
    "respond_to_apology",
    "thanking",
    "opening",
    "closing",
    "abandon",
    "back_channeling",
    "incomplete",
];

/// Acts the synthetic generator actually emits.
pub const ACTIVE_ACTS: [&str; 10] = [
    "statement",
    "opinion",
    "comment",
    "positive_answer",
    "negative_answer",
    "hold",
    "open_question",
    "command",
    "complaint",
    "yes_no_question",
];

pub const DEFAULT_NON_COMPLETABLE: [&str; 5] = ["hold", "complaint", "nonsense", "apology", "incomplete"];

pub fn act_id(name: &str) -> Option<usize> {
    DIALOG_ACTS.iter().position(|&a| a == name)
}

pub fn act_name(id: usize) -> &'static str {
    DIALOG_ACTS[id]
}

pub fn act_ids<S: AsRef<str>>(names: &[S]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| act_id(n.as_ref()).ok_or_else(|| Error::invalid(format!("unknown dialog act `{}`", n.as_ref()))))
        .collect()
}

/// Parses a label file: one label per line, blank lines and `#` comments skipped.
pub fn parse_label_file(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect()
}

use serde::{Deserialize, Serialize};

use super::inventory::{act_id, act_name};
use crate::understanding::bio::{is_valid_bio, Span, TagSet};
use crate::understanding::frames::{extract_frames, Predicate, SrlFrame};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    System,
    User,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DialogTurn {
    pub speaker: Speaker,
    pub tokens: Vec<String>,
}

impl DialogTurn {
    pub fn system(text: &str) -> Self {
        DialogTurn {
            speaker: Speaker::System,
            tokens: tokenize(text),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompletionCase {
    HadEllipsis,
    ModifiedToEllipsis,
    AlreadyComplete,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompletionExample {
    pub context: Vec<DialogTurn>,
    pub source: Vec<String>,
    pub reference: Vec<String>,
    #[serde(rename = "case")]
    pub completion_case: CompletionCase,
}

/// Dialog act example. `labels` holds inventory ids, ascending and unique.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DaExample {
    pub context: Vec<DialogTurn>,
    pub utterance: Vec<String>,
    pub labels: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredicateSource {
    InUtterance,
    InContext,
}

/// One annotated frame: the predicate location plus per-token role tags.
/// For `in_context` predicates `predicate_span`, when given, indexes the last
/// context turn.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SrlAnnotation {
    pub predicate_source: PredicateSource,
    #[serde(default)]
    pub predicate_span: Option<Span>,
    pub tags: Vec<String>,
}

impl SrlAnnotation {
    pub fn to_frame(&self) -> SrlFrame {
        let predicate = match (self.predicate_source, self.predicate_span) {
            (PredicateSource::InUtterance, Some(s)) => Predicate::InUtterance(s),
            _ => Predicate::Context,
        };
        extract_frames(&self.tags, predicate)
    }

    pub fn from_frame(frame: &SrlFrame, len: usize) -> Self {
        let spans: Vec<(String, Span)> = frame.arguments.iter().map(|a| (a.role.clone(), a.span)).collect();
        let tags = crate::understanding::bio::spans_to_bio(len, &spans);
        match frame.predicate {
            Predicate::InUtterance(s) => SrlAnnotation {
                predicate_source: PredicateSource::InUtterance,
                predicate_span: Some(s),
                tags,
            },
            Predicate::Context => SrlAnnotation {
                predicate_source: PredicateSource::InContext,
                predicate_span: None,
                tags,
            },
        }
    }
}

/// SRL example over the original utterance. The optional reference
/// completion with its own frames trains the completed-utterance tagger.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SrlExample {
    pub context: Vec<DialogTurn>,
    pub utterance: Vec<String>,
    pub frames: Vec<SrlAnnotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_frames: Option<Vec<SrlAnnotation>>,
}

impl SrlExample {
    pub fn gold_frames(&self) -> Vec<SrlFrame> {
        self.frames.iter().map(SrlAnnotation::to_frame).collect()
    }

    pub fn reference_gold(&self) -> Option<(Vec<String>, Vec<SrlFrame>)> {
        let r = self.reference.clone()?;
        let f = self.reference_frames.as_ref()?.iter().map(SrlAnnotation::to_frame).collect();
        Some((r, f))
    }
}

/// Lowercases, turns punctuation into separators and keeps in-word apostrophes.
pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let cleaned: String = lower
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '\'' { c } else { ' ' })
        .collect();
    cleaned
        .split_whitespace()
        .map(|w| w.trim_matches('\'').to_string())
        .filter(|w| !w.is_empty())
        .collect()
}

/// A validation failure before the line number is known.
#[derive(Debug, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    fn new(field: &str, message: impl Into<String>) -> Self {
        FieldError {
            field: field.into(),
            message: message.into(),
        }
    }
}

type Check = std::result::Result<(), FieldError>;

fn check_tokens(field: &str, tokens: &[String], allow_empty: bool) -> Check {
    if tokens.is_empty() && !allow_empty {
        return Err(FieldError::new(field, "must be nonempty"));
    }
    for t in tokens {
        if t.is_empty() || t.chars().any(char::is_whitespace) {
            return Err(FieldError::new(field, format!("bad token {t:?}")));
        }
    }
    Ok(())
}

fn check_context(context: &[DialogTurn]) -> Check {
    for t in context {
        check_tokens("context", &t.tokens, false)?;
    }
    Ok(())
}

fn check_annotations(field: &str, utterance: &[String], frames: &[SrlAnnotation], tagset: &TagSet) -> Check {
    for a in frames {
        if a.tags.len() != utterance.len() {
            return Err(FieldError::new(
                field,
                format!("{} tags for {} tokens", a.tags.len(), utterance.len()),
            ));
        }
        if !is_valid_bio(&a.tags) {
            return Err(FieldError::new(field, format!("invalid BIO sequence {:?}", a.tags)));
        }
        if let Some(t) = a.tags.iter().find(|t| tagset.id(t).is_none()) {
            return Err(FieldError::new(field, format!("unknown tag `{t}`")));
        }
        match (a.predicate_source, a.predicate_span) {
            (PredicateSource::InUtterance, None) => {
                return Err(FieldError::new(field, "in_utterance predicate needs predicate_span"));
            }
            (PredicateSource::InUtterance, Some(s)) if s.start > s.end || s.end >= utterance.len() => {
                return Err(FieldError::new(field, format!("predicate span {s:?} out of bounds")));
            }
            _ => {}
        }
    }
    Ok(())
}

/// Validation of the invariants every loaded or generated example must hold.
pub trait Validate {
    fn validate(&self) -> Check;
}

impl Validate for CompletionExample {
    fn validate(&self) -> Check {
        check_context(&self.context)?;
        check_tokens("source", &self.source, false)?;
        check_tokens("reference", &self.reference, false)?;
        if self.completion_case == CompletionCase::AlreadyComplete && self.reference != self.source {
            return Err(FieldError::new("reference", "already_complete requires reference == source"));
        }
        Ok(())
    }
}

impl Validate for DaExample {
    fn validate(&self) -> Check {
        check_context(&self.context)?;
        check_tokens("utterance", &self.utterance, false)?;
        if self.labels.is_empty() {
            return Err(FieldError::new("labels", "must be nonempty"));
        }
        if self.labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FieldError::new("labels", "must be unique"));
        }
        Ok(())
    }
}

impl Validate for SrlExample {
    fn validate(&self) -> Check {
        check_context(&self.context)?;
        check_tokens("utterance", &self.utterance, false)?;
        let tagset = TagSet::roles();
        check_annotations("frames", &self.utterance, &self.frames, &tagset)?;
        match (&self.reference, &self.reference_frames) {
            (Some(r), Some(f)) => {
                check_tokens("reference", r, false)?;
                check_annotations("reference_frames", r, f, &tagset)
            }
            (None, None) => Ok(()),
            (Some(_), None) => Err(FieldError::new("reference_frames", "required with reference")),
            (None, Some(_)) => Err(FieldError::new("reference", "required with reference_frames")),
        }
    }
}

/// On-disk form of [`DaExample`]: labels by name.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DaRecord {
    pub context: Vec<DialogTurn>,
    pub utterance: Vec<String>,
    pub labels: Vec<String>,
}

impl DaRecord {
    pub fn into_example(self) -> std::result::Result<DaExample, FieldError> {
        let mut labels = Vec::with_capacity(self.labels.len());
        for name in &self.labels {
            let id = act_id(name).ok_or_else(|| FieldError::new("labels", format!("unknown dialog act `{name}`")))?;
            if labels.contains(&id) {
                return Err(FieldError::new("labels", format!("duplicate label `{name}`")));
            }
            labels.push(id);
        }
        labels.sort_unstable();
        let ex = DaExample {
            context: self.context,
            utterance: self.utterance,
            labels,
        };
        ex.validate()?;
        Ok(ex)
    }

    pub fn from_example(ex: &DaExample) -> Self {
        DaRecord {
            context: ex.context.clone(),
            utterance: ex.utterance.clone(),
            labels: ex.labels.iter().map(|&i| act_name(i).to_string()).collect(),
        }
    }
}

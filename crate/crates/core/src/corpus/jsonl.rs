//! JSONL corpus reading and writing.
//!
//! Each line is one JSON object in the canonical schema (see
//! `docs/formats.md`). A field mapping renames top-level keys of foreign
//! files onto canonical names before validation; mapping a key to `null`
//! drops it.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use super::types::{CompletionExample, DaExample, DaRecord, FieldError, SrlExample, Validate};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorpusKind {
    Completion,
    Da,
    Srl,
}

impl std::str::FromStr for CorpusKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "completion" => Ok(CorpusKind::Completion),
            "da" => Ok(CorpusKind::Da),
            "srl" => Ok(CorpusKind::Srl),
            _ => Err(Error::invalid(format!("unknown corpus kind `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Corpus {
    Completion(Vec<CompletionExample>),
    Da(Vec<DaExample>),
    Srl(Vec<SrlExample>),
}

impl Corpus {
    pub fn len(&self) -> usize {
        match self {
            Corpus::Completion(v) => v.len(),
            Corpus::Da(v) => v.len(),
            Corpus::Srl(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Top-level key renames: foreign name → canonical name (or `None` to drop).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FieldMapping(pub HashMap<String, Option<String>>);

impl FieldMapping {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let map: HashMap<String, Option<String>> =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(FieldMapping(map))
    }

    fn apply(&self, v: Value) -> Value {
        if self.0.is_empty() {
            return v;
        }
        match v {
            Value::Object(m) => Value::Object(
                m.into_iter()
                    .filter_map(|(k, val)| match self.0.get(&k) {
                        Some(Some(new)) => Some((new.clone(), val)),
                        Some(None) => None,
                        None => Some((k, val)),
                    })
                    .collect(),
            ),
            other => other,
        }
    }
}

/// A corpus example with an on-disk representation.
pub trait Record: Sized {
    type Raw: Serialize + DeserializeOwned;
    fn from_raw(raw: Self::Raw) -> std::result::Result<Self, FieldError>;
    fn to_raw(&self) -> Self::Raw;
}

macro_rules! identity_record {
    ($t:ty) => {
        impl Record for $t {
            type Raw = $t;
            fn from_raw(raw: $t) -> std::result::Result<Self, FieldError> {
                raw.validate()?;
                Ok(raw)
            }
            fn to_raw(&self) -> $t {
                self.clone()
            }
        }
    };
}

identity_record!(CompletionExample);
identity_record!(SrlExample);

impl Record for DaExample {
    type Raw = DaRecord;
    fn from_raw(raw: DaRecord) -> std::result::Result<Self, FieldError> {
        raw.into_example()
    }
    fn to_raw(&self) -> DaRecord {
        DaRecord::from_example(self)
    }
}

/// Best-effort field name from a serde message such as ``missing field `labels` ``.
fn field_of(msg: &str) -> String {
    msg.split('`').nth(1).unwrap_or("?").to_string()
}

pub fn parse_jsonl<T: Record, R: BufRead>(reader: R, mapping: &FieldMapping) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Json {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| Error::Json {
            line: line_no,
            message: e.to_string(),
        })?;
        let raw: T::Raw = serde_json::from_value(mapping.apply(value)).map_err(|e| {
            let message = e.to_string();
            Error::Validation {
                line: line_no,
                field: field_of(&message),
                message,
            }
        })?;
        let ex = T::from_raw(raw).map_err(|f| Error::Validation {
            line: line_no,
            field: f.field,
            message: f.message,
        })?;
        out.push(ex);
    }
    Ok(out)
}

pub fn load_jsonl<T: Record>(path: &Path, mapping: &FieldMapping) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(BufReader::new(file), mapping)
}

pub fn load_corpus(path: &Path, kind: CorpusKind, mapping: &FieldMapping) -> Result<Corpus> {
    Ok(match kind {
        CorpusKind::Completion => Corpus::Completion(load_jsonl(path, mapping)?),
        CorpusKind::Da => Corpus::Da(load_jsonl(path, mapping)?),
        CorpusKind::Srl => Corpus::Srl(load_jsonl(path, mapping)?),
    })
}

pub fn to_jsonl<T: Record>(items: &[T]) -> String {
    let mut s = String::new();
    for it in items {
        s.push_str(&serde_json::to_string(&it.to_raw()).expect("records serialise"));
        s.push('\n');
    }
    s
}

pub fn save_jsonl<T: Record>(path: &Path, items: &[T]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(to_jsonl(items).as_bytes()).map_err(|e| Error::io(path, e))
}

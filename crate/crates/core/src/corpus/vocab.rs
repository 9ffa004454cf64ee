use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::types::DialogTurn;
use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const SOS: usize = 2;
pub const EOS: usize = 3;
pub const SEP: usize = 4;
pub const RESERVED: [&str; 5] = ["<pad>", "<unk>", "<s>", "</s>", "<sep>"];

/// Token/id bijection with the reserved tokens at fixed ids `0..5`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = Error;

    fn try_from(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < RESERVED.len() || tokens[..RESERVED.len()] != RESERVED {
            return Err(Error::invalid("vocabulary must start with the reserved tokens"));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate vocabulary entry `{t}`")));
            }
        }
        Ok(Vocabulary { tokens, index })
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Id of `token`, or [`UNK`].
    pub fn id(&self, token: &str) -> usize {
        self.get(token).unwrap_or(UNK)
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Builds a vocabulary from every token with count ≥ `min_count`, ordered by
/// count descending then lexicographically. `max_size`, if given, caps the
/// total size including reserved tokens.
pub fn build_vocab<'a, I>(sentences: I, min_count: usize, max_size: Option<usize>) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a [String]>,
{
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut any = false;
    for s in sentences {
        any = true;
        for t in s {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    if !any {
        return Err(Error::invalid("cannot build a vocabulary from an empty corpus"));
    }
    let mut entries: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|(t, c)| *c >= min_count.max(1) && !RESERVED.contains(t))
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let mut tokens: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
    let room = max_size.map_or(usize::MAX, |m| m.saturating_sub(RESERVED.len()));
    tokens.extend(entries.into_iter().take(room).map(|(t, _)| t.to_string()));
    Vocabulary::try_from(tokens)
}

/// Per-example extension of a base vocabulary with temporary ids for source
/// tokens the base lacks. Temporary ids start at `base_len`.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ExtendedVocab {
    pub base_len: usize,
    pub oov: Vec<String>,
}

impl ExtendedVocab {
    pub fn len(&self) -> usize {
        self.base_len + self.oov.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Extended id of `token`: base id if known, temporary id if it is a source OOV.
    pub fn id(&self, base: &Vocabulary, token: &str) -> Option<usize> {
        base.get(token)
            .or_else(|| self.oov.iter().position(|t| t == token).map(|i| self.base_len + i))
    }

    pub fn token<'a>(&'a self, base: &'a Vocabulary, id: usize) -> &'a str {
        if id < self.base_len {
            base.token(id)
        } else {
            &self.oov[id - self.base_len]
        }
    }

    pub fn is_temporary(&self, id: usize) -> bool {
        id >= self.base_len
    }
}

/// Encoder input for one example.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedSource {
    /// Surface tokens including `<sep>` and `</s>` markers.
    pub tokens: Vec<String>,
    /// Base ids fed to the encoder embedding (OOV → UNK).
    pub ids: Vec<usize>,
    /// Extended id of every position; the copy-position map.
    pub copy_ids: Vec<usize>,
    pub ext: ExtendedVocab,
}

impl EncodedSource {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// `last history_depth context turns (each followed by <sep>), source, </s>`.
pub fn encode_source(vocab: &Vocabulary, context: &[DialogTurn], source: &[String], history_depth: usize) -> EncodedSource {
    let mut tokens = Vec::new();
    let start = context.len().saturating_sub(history_depth);
    for turn in &context[start..] {
        tokens.extend(turn.tokens.iter().cloned());
        tokens.push(RESERVED[SEP].to_string());
    }
    tokens.extend(source.iter().cloned());
    tokens.push(RESERVED[EOS].to_string());

    let mut ext = ExtendedVocab {
        base_len: vocab.len(),
        oov: Vec::new(),
    };
    let mut ids = Vec::with_capacity(tokens.len());
    let mut copy_ids = Vec::with_capacity(tokens.len());
    for t in &tokens {
        match vocab.get(t) {
            Some(id) => {
                ids.push(id);
                copy_ids.push(id);
            }
            None => {
                ids.push(UNK);
                let tid = match ext.oov.iter().position(|o| o == t) {
                    Some(i) => ext.base_len + i,
                    None => {
                        ext.oov.push(t.clone());
                        ext.base_len + ext.oov.len() - 1
                    }
                };
                copy_ids.push(tid);
            }
        }
    }
    EncodedSource {
        tokens,
        ids,
        copy_ids,
        ext,
    }
}

/// Extended ids of a target sequence followed by `</s>`. Tokens outside
/// base ∪ source become UNK; the count of those is returned alongside.
pub fn encode_target(vocab: &Vocabulary, ext: &ExtendedVocab, target: &[String]) -> (Vec<usize>, usize) {
    let mut unk = 0;
    let mut ids: Vec<usize> = target
        .iter()
        .map(|t| {
            ext.id(vocab, t).unwrap_or_else(|| {
                unk += 1;
                UNK
            })
        })
        .collect();
    ids.push(EOS);
    (ids, unk)
}

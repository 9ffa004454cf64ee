//! BIO tag sets, validity, span extraction and constrained Viterbi decoding.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Inclusive token span `[start, end]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn single(i: usize) -> Self {
        Span { start: i, end: i }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i <= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

impl From<[usize; 2]> for Span {
    fn from(a: [usize; 2]) -> Self {
        Span { start: a[0], end: a[1] }
    }
}

impl From<Span> for [usize; 2] {
    fn from(s: Span) -> Self {
        [s.start, s.end]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tag<'a> {
    O,
    B(&'a str),
    I(&'a str),
}

impl<'a> Tag<'a> {
    pub fn parse(s: &'a str) -> Option<Tag<'a>> {
        if s == "O" {
            Some(Tag::O)
        } else if let Some(r) = s.strip_prefix("B-") {
            (!r.is_empty()).then_some(Tag::B(r))
        } else if let Some(r) = s.strip_prefix("I-") {
            (!r.is_empty()).then_some(Tag::I(r))
        } else {
            None
        }
    }

    pub fn role(&self) -> Option<&'a str> {
        match self {
            Tag::O => None,
            Tag::B(r) | Tag::I(r) => Some(r),
        }
    }
}

/// `I-X` may only follow `B-X` or `I-X`.
pub fn transition_ok(prev: Option<Tag>, cur: Tag) -> bool {
    match cur {
        Tag::O | Tag::B(_) => true,
        Tag::I(r) => matches!(prev, Some(Tag::B(p)) | Some(Tag::I(p)) if p == r),
    }
}

pub fn is_valid_bio<S: AsRef<str>>(tags: &[S]) -> bool {
    let mut prev = None;
    for t in tags {
        let Some(cur) = Tag::parse(t.as_ref()) else {
            return false;
        };
        if !transition_ok(prev, cur) {
            return false;
        }
        prev = Some(cur);
    }
    true
}

/// Maximal `B-X (I-X)*` runs as `(role, span)`, in order.
pub fn bio_spans<S: AsRef<str>>(tags: &[S]) -> Vec<(String, Span)> {
    let mut out: Vec<(String, Span)> = Vec::new();
    let mut open: Option<(String, usize)> = None;
    for (i, t) in tags.iter().enumerate() {
        let tag = Tag::parse(t.as_ref()).unwrap_or(Tag::O);
        match tag {
            Tag::I(r) if open.as_ref().is_some_and(|(o, _)| o == r) => {}
            _ => {
                if let Some((role, s)) = open.take() {
                    out.push((role, Span::new(s, i - 1)));
                }
                if let Tag::B(r) = tag {
                    open = Some((r.to_string(), i));
                }
            }
        }
    }
    if let Some((role, s)) = open {
        out.push((role, Span::new(s, tags.len() - 1)));
    }
    out
}

/// Inverse of [`bio_spans`] for non-overlapping spans.
pub fn spans_to_bio(n: usize, spans: &[(String, Span)]) -> Vec<String> {
    let mut tags = vec!["O".to_string(); n];
    for (role, s) in spans {
        for i in s.indices() {
            tags[i] = if i == s.start {
                format!("B-{role}")
            } else {
                format!("I-{role}")
            };
        }
    }
    tags
}

/// Closed BIO tag inventory: `O` followed by `B-r`, `I-r` for each role.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct TagSet {
    tags: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for TagSet {
    fn from(tags: Vec<String>) -> Self {
        let index = tags.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        TagSet { tags, index }
    }
}

impl From<TagSet> for Vec<String> {
    fn from(t: TagSet) -> Self {
        t.tags
    }
}

pub const DEFAULT_ROLES: &[&str] = &[
    "ARG0", "ARG1", "ARG2", "ARG3", "ARG4", "ARGM-TMP", "ARGM-LOC", "ARGM-ADV", "ARGM-NEG", "ARGM-MNR",
];

impl TagSet {
    pub fn from_roles<S: AsRef<str>>(roles: &[S]) -> Self {
        let mut tags = vec!["O".to_string()];
        for r in roles {
            tags.push(format!("B-{}", r.as_ref()));
            tags.push(format!("I-{}", r.as_ref()));
        }
        TagSet::from(tags)
    }

    pub fn roles() -> Self {
        Self::from_roles(DEFAULT_ROLES)
    }

    /// `{O, B-V, I-V}` for predicate identification.
    pub fn predicate() -> Self {
        Self::from_roles(&["V"])
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn id(&self, tag: &str) -> Option<usize> {
        self.index.get(tag).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.tags[id]
    }

    pub fn names(&self) -> &[String] {
        &self.tags
    }

    pub fn transition_mask(&self) -> TransitionMask {
        let parsed: Vec<Tag> = self.tags.iter().map(|t| Tag::parse(t).unwrap_or(Tag::O)).collect();
        let start = parsed.iter().map(|&t| transition_ok(None, t)).collect();
        let allowed = parsed
            .iter()
            .map(|&p| parsed.iter().map(|&c| transition_ok(Some(p), c)).collect())
            .collect();
        TransitionMask { start, allowed }
    }
}

/// `start[j]`: tag `j` may open a sequence; `allowed[i][j]`: `j` may follow `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMask {
    pub start: Vec<bool>,
    pub allowed: Vec<Vec<bool>>,
}

/// Highest-probability tag path that respects `mask`. Probabilities of zero
/// are allowed; ties go to the lower tag id.
pub fn viterbi_bio(dists: &[Vec<f64>], mask: &TransitionMask) -> Vec<usize> {
    let n = dists.len();
    if n == 0 {
        return Vec::new();
    }
    let k = mask.start.len();
    let logp = |p: f64| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY };
    // None marks an unreachable state.
    let mut score: Vec<Option<f64>> = (0..k)
        .map(|j| mask.start[j].then(|| logp(dists[0][j])))
        .collect();
    let mut back = vec![vec![0usize; k]; n];
    for t in 1..n {
        let mut next = vec![None; k];
        for j in 0..k {
            let mut best: Option<(f64, usize)> = None;
            for (i, s) in score.iter().enumerate() {
                let Some(s) = s else { continue };
                if !mask.allowed[i][j] {
                    continue;
                }
                if best.map_or(true, |(b, _)| *s > b) {
                    best = Some((*s, i));
                }
            }
            if let Some((b, i)) = best {
                next[j] = Some(b + logp(dists[t][j]));
                back[t][j] = i;
            }
        }
        score = next;
    }
    let mut last = None;
    for (j, s) in score.iter().enumerate() {
        if let Some(s) = s {
            if last.map_or(true, |(b, _)| *s > b) {
                last = Some((*s, j));
            }
        }
    }
    let mut path = vec![0; n];
    path[n - 1] = last.map(|(_, j)| j).unwrap_or(0);
    for t in (1..n).rev() {
        path[t - 1] = back[t][path[t]];
    }
    path
}

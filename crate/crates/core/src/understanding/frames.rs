use serde::{Deserialize, Serialize};

use super::bio::{bio_spans, Span};

/// Where a frame's predicate lives. Frames are keyed by predicate when
/// scoring and merging, so two frames with `Context` predicates are the same
/// frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    InUtterance(Span),
    Context,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Argument {
    pub role: String,
    pub span: Span,
    /// Set on projected arguments that cover only completed-in material.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub context_side: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrlFrame {
    pub predicate: Predicate,
    pub arguments: Vec<Argument>,
}

impl SrlFrame {
    pub fn new(predicate: Predicate) -> Self {
        SrlFrame {
            predicate,
            arguments: Vec::new(),
        }
    }

    pub fn with_args(predicate: Predicate, args: &[(&str, Span)]) -> Self {
        SrlFrame {
            predicate,
            arguments: args
                .iter()
                .map(|(r, s)| Argument {
                    role: r.to_string(),
                    span: *s,
                    context_side: false,
                })
                .collect(),
        }
    }
}

/// Arguments from a role tag sequence. `V` spans are predicate marks, not arguments.
pub fn extract_frames<S: AsRef<str>>(tags: &[S], predicate: Predicate) -> SrlFrame {
    let arguments = bio_spans(tags)
        .into_iter()
        .filter(|(r, _)| r != "V")
        .map(|(role, span)| Argument {
            role,
            span,
            context_side: false,
        })
        .collect();
    SrlFrame { predicate, arguments }
}

/// `B-V (I-V)*` runs of a predicate-identification tag sequence.
pub fn predicate_spans<S: AsRef<str>>(tags: &[S]) -> Vec<Span> {
    bio_spans(tags)
        .into_iter()
        .filter(|(r, _)| r == "V")
        .map(|(_, s)| s)
        .collect()
}

pub fn has_predicate(frames: &[SrlFrame]) -> bool {
    frames.iter().any(|f| matches!(f.predicate, Predicate::InUtterance(_)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_argument() {
        let f = extract_frames(&["B-ARG1", "I-ARG1", "O"], Predicate::Context);
        assert_eq!(f, SrlFrame::with_args(Predicate::Context, &[("ARG1", Span::new(0, 1))]));
    }

    #[test]
    fn all_outside() {
        let f = extract_frames(&["O", "O"], Predicate::Context);
        assert!(f.arguments.is_empty());
        assert!(predicate_spans(&["O", "O"]).is_empty());
        assert!(!has_predicate(&[f]));
    }

    #[test]
    fn context_predicate_guitars() {
        // "guitars" answering "what do you want to talk about"
        let f = extract_frames(&["B-ARG1"], Predicate::Context);
        assert_eq!(f.predicate, Predicate::Context);
        assert_eq!(f.arguments[0].role, "ARG1");
        assert_eq!(f.arguments[0].span, Span::single(0));
        assert!(!has_predicate(&[f.clone()]));
        let g = SrlFrame::new(Predicate::InUtterance(Span::single(1)));
        assert!(has_predicate(&[f, g]));
    }

    #[test]
    fn serde_shape() {
        let f = SrlFrame::with_args(Predicate::InUtterance(Span::new(1, 1)), &[("ARG0", Span::single(0))]);
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"predicate":{"in_utterance":[1,1]},"arguments":[{"role":"ARG0","span":[0,0]}]}"#);
        let c = serde_json::to_string(&Predicate::Context).unwrap();
        assert_eq!(c, r#""context""#);
    }
}

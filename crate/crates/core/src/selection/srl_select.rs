//! SRL selectors: rule-based (predicate present in the original or not) and
//! probability-based (per completed argument, gated on beam posteriors).

use serde::{Deserialize, Serialize};

use super::align::project_frames;
use crate::error::{Error, Result};
use crate::understanding::{has_predicate, Predicate, SrlFrame};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SrlRoute {
    Original,
    Completed,
    /// Per-argument merge of both paths.
    Merged,
}

/// Original-path frames when the original has a predicate, otherwise the
/// completed-path frames projected onto original tokens.
pub fn srl_select_rule(
    frames_e: &[SrlFrame],
    frames_c: &[SrlFrame],
    alignment: &[Option<usize>],
    completed_len: usize,
) -> (Vec<SrlFrame>, SrlRoute) {
    if has_predicate(frames_e) {
        (frames_e.to_vec(), SrlRoute::Original)
    } else {
        (project_frames(frames_c, alignment, completed_len), SrlRoute::Completed)
    }
}

/// Probability-based selection.
///
/// Without a predicate in the original this is the rule-based choice. With
/// one, each completed-path argument is accepted iff the minimum posterior
/// over its completed tokens is at least `tau`. Accepted arguments are
/// projected and replace overlapping original-path arguments of the same
/// frame; everything else comes from the original path.
pub fn srl_select_probability(
    frames_e: &[SrlFrame],
    frames_c: &[SrlFrame],
    posteriors: &[f64],
    alignment: &[Option<usize>],
    tau: f64,
) -> Result<(Vec<SrlFrame>, SrlRoute)> {
    let completed_len = posteriors.len();
    if alignment.iter().flatten().any(|&j| j >= completed_len) {
        return Err(Error::invalid("alignment points past the completed utterance"));
    }
    for f in frames_c {
        let spans = f.arguments.iter().map(|a| a.span).chain(match f.predicate {
            Predicate::InUtterance(s) => Some(s),
            Predicate::Context => None,
        });
        for s in spans {
            if s.end >= completed_len {
                return Err(Error::invalid(format!(
                    "{} posteriors do not cover completed span [{}, {}]",
                    completed_len, s.start, s.end
                )));
            }
        }
    }
    if !has_predicate(frames_e) {
        return Ok(srl_select_rule(frames_e, frames_c, alignment, completed_len));
    }
    let accepted: Vec<SrlFrame> = frames_c
        .iter()
        .map(|f| SrlFrame {
            predicate: f.predicate,
            arguments: f
                .arguments
                .iter()
                .filter(|a| a.span.indices().map(|j| posteriors[j]).fold(f64::INFINITY, f64::min) >= tau)
                .cloned()
                .collect(),
        })
        .filter(|f| !f.arguments.is_empty())
        .collect();
    if accepted.is_empty() {
        return Ok((frames_e.to_vec(), SrlRoute::Original));
    }
    let mut out = frames_e.to_vec();
    for p in project_frames(&accepted, alignment, completed_len) {
        let k = match out.iter().position(|f| f.predicate == p.predicate) {
            Some(k) => k,
            None => {
                out.push(SrlFrame::new(p.predicate));
                out.len() - 1
            }
        };
        let target = &mut out[k];
        for a in p.arguments {
            let clash = |e: &crate::understanding::Argument| !a.context_side && !e.context_side && e.span.overlaps(&a.span);
            let at = target.arguments.iter().position(clash).unwrap_or(target.arguments.len());
            let before = target.arguments[..at].iter().filter(|e| **e != a && clash(e)).count();
            target.arguments.retain(|e| *e == a || !clash(e));
            if !target.arguments.contains(&a) {
                target.arguments.insert(at - before, a);
            }
        }
    }
    Ok((out, SrlRoute::Merged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::types::tokenize;
    use crate::selection::align;
    use crate::understanding::{Argument, Span};

    fn arg(role: &str, s: usize, e: usize) -> Argument {
        Argument {
            role: role.into(),
            span: Span::new(s, e),
            context_side: false,
        }
    }

    #[test]
    fn rule_branches() {
        let e = vec![SrlFrame::with_args(Predicate::InUtterance(Span::single(1)), &[("ARG0", Span::single(0))])];
        let c = vec![SrlFrame::with_args(Predicate::InUtterance(Span::single(2)), &[("ARG1", Span::single(3))])];
        let al = align(&tokenize("i do"), &tokenize("i do like cats"));
        assert_eq!(srl_select_rule(&e, &c, &al, 4), (e.clone(), SrlRoute::Original));
        let (f, r) = srl_select_rule(&[], &c, &al, 4);
        assert_eq!(r, SrlRoute::Completed);
        assert_eq!(f[0].predicate, Predicate::Context);
        assert!(f[0].arguments[0].context_side);
        assert!(srl_select_rule(&[], &[], &al, 4).0.is_empty());
    }

    #[test]
    fn david_david_falls_back() {
        // original "david" (predicate "is" present), completion duplicated the name
        let orig = tokenize("his name is david");
        let comp = tokenize("his name is david david");
        let al = align(&orig, &comp);
        let pred = Predicate::InUtterance(Span::single(2));
        let e = vec![SrlFrame {
            predicate: pred,
            arguments: vec![arg("ARG1", 0, 1), arg("ARG2", 3, 3)],
        }];
        let c = vec![SrlFrame {
            predicate: pred,
            arguments: vec![arg("ARG1", 0, 1), arg("ARG2", 3, 4)],
        }];
        let post = [0.99, 0.99, 0.99, 0.9, 0.85];
        let (f, _) = srl_select_probability(&e, &c, &post, &al, 0.95).unwrap();
        assert_eq!(f, e);
        let (f, r) = srl_select_probability(&e, &c, &post, &al, 0.8).unwrap();
        assert_eq!(r, SrlRoute::Merged);
        assert!(f[0].arguments.contains(&arg("ARG2", 3, 3)));
        assert!(srl_select_probability(&e, &c, &post[..4], &al, 0.5).is_err());
    }

    #[test]
    fn thresholds_reproduce_pure_strategies() {
        let orig = tokenize("i do not");
        let comp = tokenize("i do not like dogs");
        let al = align(&orig, &comp);
        let e = vec![SrlFrame::with_args(
            Predicate::InUtterance(Span::single(1)),
            &[("ARG0", Span::single(0)), ("ARG1", Span::single(2))],
        )];
        let c = vec![SrlFrame::with_args(
            Predicate::InUtterance(Span::single(1)),
            &[("ARG0", Span::single(0)), ("ARGM-NEG", Span::single(2)), ("ARG1", Span::single(4))],
        )];
        let post = [0.9, 0.8, 0.7, 0.6, 0.5];
        let (hi, _) = srl_select_probability(&e, &c, &post, &al, 1.5).unwrap();
        assert_eq!(hi, srl_select_rule(&e, &c, &al, 5).0);
        let (lo, _) = srl_select_probability(&e, &c, &post, &al, 0.0).unwrap();
        let projected = project_frames(&c, &al, 5);
        for a in &projected[0].arguments {
            assert!(lo[0].arguments.contains(a), "{a:?}");
        }
        assert!(!lo[0].arguments.contains(&arg("ARG1", 2, 2)));
    }
}

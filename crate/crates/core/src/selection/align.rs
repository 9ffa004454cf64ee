//! Token alignment between an original utterance and its completion, and
//! projection of completed-path frames onto original tokens.

use std::collections::BTreeMap;

use crate::understanding::{Argument, Predicate, Span, SrlFrame};

/// For each original token, its index in `completed` under a longest common
/// subsequence of exact matches, or `None`.
///
/// Among maximal matchings the one whose indices are largest, compared from
/// the last original token backwards, is chosen: completions add recovered
/// words around the original ones, which usually sit at the end.
pub fn align<S: AsRef<str>, T: AsRef<str>>(original: &[S], completed: &[T]) -> Vec<Option<usize>> {
    let (n, m) = (original.len(), completed.len());
    let eq = |i: usize, j: usize| original[i].as_ref() == completed[j].as_ref();
    // dp[i][j]: LCS length of original[..i] and completed[..j]
    let mut dp = vec![vec![0u32; m + 1]; n + 1];
    for i in 1..=n {
        for j in 1..=m {
            dp[i][j] = if eq(i - 1, j - 1) {
                dp[i - 1][j - 1] + 1
            } else {
                dp[i - 1][j].max(dp[i][j - 1])
            };
        }
    }
    // Walk back from the ends. Each original token takes the largest
    // completed index that still allows an LCS of the remaining prefixes.
    let mut out = vec![None; n];
    let mut j = m;
    for i in (1..=n).rev() {
        if let Some(k) = (0..j).rev().find(|&k| eq(i - 1, k) && dp[i - 1][k] + 1 == dp[i][j]) {
            out[i - 1] = Some(k);
            j = k;
        }
    }
    out
}

/// Completed index -> original index.
pub fn invert(alignment: &[Option<usize>], completed_len: usize) -> Vec<Option<usize>> {
    let mut inv = vec![None; completed_len];
    for (i, a) in alignment.iter().enumerate() {
        if let Some(j) = a {
            inv[*j] = Some(i);
        }
    }
    inv
}

fn map_span(span: Span, inv: &[Option<usize>]) -> Option<(Span, bool)> {
    let mapped: Vec<usize> = span.indices().filter_map(|j| inv.get(j).copied().flatten()).collect();
    let (lo, hi) = (*mapped.iter().min()?, *mapped.iter().max()?);
    Some((Span::new(lo, hi), mapped.len() == span.len()))
}

/// Re-expresses frames over completed tokens in original-token indices.
///
/// A predicate not wholly present in the original becomes a context
/// predicate. Arguments are mapped to the hull of their aligned tokens;
/// arguments with no aligned token are kept with `context_side` set and their
/// completed-token span. Frames that end up with the same predicate merge.
pub fn project_frames(frames: &[SrlFrame], alignment: &[Option<usize>], completed_len: usize) -> Vec<SrlFrame> {
    let inv = invert(alignment, completed_len);
    let mut merged: BTreeMap<usize, SrlFrame> = BTreeMap::new();
    let mut order: Vec<Predicate> = Vec::new();
    for f in frames {
        let predicate = match f.predicate {
            Predicate::InUtterance(s) => match map_span(s, &inv) {
                Some((p, true)) if p.len() == s.len() => Predicate::InUtterance(p),
                _ => Predicate::Context,
            },
            Predicate::Context => Predicate::Context,
        };
        let slot = match order.iter().position(|p| *p == predicate) {
            Some(k) => k,
            None => {
                order.push(predicate);
                order.len() - 1
            }
        };
        let target = merged.entry(slot).or_insert_with(|| SrlFrame::new(predicate));
        for a in &f.arguments {
            let arg = match map_span(a.span, &inv) {
                Some((span, _)) => Argument {
                    role: a.role.clone(),
                    span,
                    context_side: false,
                },
                None => Argument {
                    role: a.role.clone(),
                    span: a.span,
                    context_side: true,
                },
            };
            if !target.arguments.contains(&arg) {
                target.arguments.push(arg);
            }
        }
    }
    merged.into_values().collect()
}

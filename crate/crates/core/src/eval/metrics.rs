use std::collections::{BTreeSet, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::selection::project_frames;
use crate::understanding::{Predicate, Span, SrlFrame};

/// Precision, recall and F1 with the counts behind them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
}

pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl Prf {
    /// Zero denominators give zero.
    pub fn from_counts(correct: usize, predicted: usize, gold: usize) -> Self {
        let (p, r) = (ratio(correct, predicted), ratio(correct, gold));
        Prf {
            precision: p,
            recall: r,
            f1: f1(p, r),
            correct,
            predicted,
            gold,
        }
    }
}

fn same_count(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::invalid(format!("{a} predictions against {b} references")));
    }
    Ok(())
}

fn counts<T: Eq + Hash + Clone>(xs: &[T]) -> HashMap<T, usize> {
    let mut m = HashMap::new();
    for x in xs {
        *m.entry(x.clone()).or_insert(0) += 1;
    }
    m
}

/// Size of the multiset intersection.
fn clipped_overlap<T: Eq + Hash + Clone>(hyp: &[T], reference: &[T]) -> usize {
    let r = counts(reference);
    counts(hyp).into_iter().map(|(k, c)| c.min(r.get(&k).copied().unwrap_or(0))).sum()
}

/// Corpus BLEU: geometric mean of clipped n-gram precisions for n = 1..=max_n
/// times the brevity penalty `min(1, exp(1 - r/c))`. Counts for n >= 2 are
/// add-one smoothed (`(m + 1) / (t + 1)`); unigram counts are not.
pub fn bleu<S: AsRef<str>>(hyps: &[Vec<S>], refs: &[Vec<S>], max_n: usize) -> Result<f64> {
    same_count(hyps.len(), refs.len())?;
    if hyps.is_empty() {
        return Err(Error::invalid("BLEU over an empty hypothesis set"));
    }
    if max_n == 0 {
        return Err(Error::invalid("BLEU needs max_n >= 1"));
    }
    let (mut c, mut r) = (0usize, 0usize);
    let mut matched = vec![0usize; max_n];
    let mut total = vec![0usize; max_n];
    for (h, rf) in hyps.iter().zip(refs) {
        let h: Vec<&str> = h.iter().map(AsRef::as_ref).collect();
        let rf: Vec<&str> = rf.iter().map(AsRef::as_ref).collect();
        c += h.len();
        r += rf.len();
        for n in 1..=max_n {
            let hg: Vec<&[&str]> = h.windows(n).collect();
            let rg: Vec<&[&str]> = rf.windows(n).collect();
            matched[n - 1] += clipped_overlap(&hg, &rg);
            total[n - 1] += hg.len();
        }
    }
    if c == 0 || matched[0] == 0 {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    for n in 0..max_n {
        let s = if n == 0 { 0.0 } else { 1.0 };
        log_sum += ((matched[n] as f64 + s) / (total[n] as f64 + s)).ln();
    }
    let bp = if c >= r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    Ok(bp * (log_sum / max_n as f64).exp())
}

pub fn exact_match<S: PartialEq>(hyps: &[Vec<S>], refs: &[Vec<S>]) -> Result<f64> {
    same_count(hyps.len(), refs.len())?;
    let hits = hyps.iter().zip(refs).filter(|(h, r)| h == r).count();
    Ok(ratio(hits, hyps.len()))
}

/// Micro precision/recall/F1 over token multisets.
pub fn word_prf<S: AsRef<str>>(hyps: &[Vec<S>], refs: &[Vec<S>]) -> Result<Prf> {
    same_count(hyps.len(), refs.len())?;
    let (mut m, mut p, mut g) = (0, 0, 0);
    for (h, r) in hyps.iter().zip(refs) {
        let h: Vec<&str> = h.iter().map(AsRef::as_ref).collect();
        let r: Vec<&str> = r.iter().map(AsRef::as_ref).collect();
        m += clipped_overlap(&h, &r);
        p += h.len();
        g += r.len();
    }
    Ok(Prf::from_counts(m, p, g))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// Pooled over label instances.
    #[default]
    Micro,
    /// Unweighted mean of per-label P, R and F1 over labels that occur in
    /// the gold or predicted sets; counts are the pooled ones.
    Macro,
}

pub fn multilabel_prf(pred: &[Vec<usize>], gold: &[Vec<usize>], averaging: Averaging) -> Result<Prf> {
    same_count(pred.len(), gold.len())?;
    let mut per: HashMap<usize, (usize, usize, usize)> = HashMap::new();
    let (mut c, mut p, mut g) = (0, 0, 0);
    for (ps, gs) in pred.iter().zip(gold) {
        let ps: BTreeSet<usize> = ps.iter().copied().collect();
        let gs: BTreeSet<usize> = gs.iter().copied().collect();
        for &l in &ps {
            let e = per.entry(l).or_default();
            e.1 += 1;
            if gs.contains(&l) {
                e.0 += 1;
                c += 1;
            }
        }
        for &l in &gs {
            per.entry(l).or_default().2 += 1;
        }
        p += ps.len();
        g += gs.len();
    }
    let pooled = Prf::from_counts(c, p, g);
    Ok(match averaging {
        Averaging::Micro => pooled,
        Averaging::Macro => {
            if per.is_empty() {
                return Ok(pooled);
            }
            let k = per.len() as f64;
            let each: Vec<Prf> = per.values().map(|&(c, p, g)| Prf::from_counts(c, p, g)).collect();
            Prf {
                precision: each.iter().map(|x| x.precision).sum::<f64>() / k,
                recall: each.iter().map(|x| x.recall).sum::<f64>() / k,
                f1: each.iter().map(|x| x.f1).sum::<f64>() / k,
                ..pooled
            }
        }
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SrlScoring {
    /// Conventional span scoring; utterances with no predicted argument are skipped.
    Standard,
    /// Empty predictions count every gold span as missed; completed-path
    /// frames are projected and context-side arguments are not scored.
    #[default]
    Modified,
}

/// Predicted frames of one utterance and the tokens they index.
#[derive(Clone, Debug, PartialEq)]
pub enum PredictedFrames {
    Original(Vec<SrlFrame>),
    /// Frames over a completed utterance of `len` tokens; `alignment` maps
    /// original tokens into it.
    Completed {
        frames: Vec<SrlFrame>,
        len: usize,
        alignment: Option<Vec<Option<usize>>>,
    },
}

type SpanKey = (Predicate, String, Span);

fn arg_keys(frames: &[SrlFrame], drop_context_side: bool) -> BTreeSet<SpanKey> {
    frames
        .iter()
        .flat_map(|f| {
            f.arguments
                .iter()
                .filter(move |a| !(drop_context_side && a.context_side))
                .map(move |a| (f.predicate, a.role.clone(), a.span))
        })
        .collect()
}

/// Span-level SRL scoring. A predicted argument is correct iff a gold
/// argument has the same predicate, role and token span. Predicate spans
/// themselves are not scored.
pub fn srl_span_prf(pred: &[PredictedFrames], gold: &[Vec<SrlFrame>], mode: SrlScoring) -> Result<Prf> {
    same_count(pred.len(), gold.len())?;
    let (mut c, mut p, mut g) = (0, 0, 0);
    for (pf, gf) in pred.iter().zip(gold) {
        let modified = mode == SrlScoring::Modified;
        let frames = match pf {
            PredictedFrames::Original(f) => f.clone(),
            PredictedFrames::Completed { frames, len, alignment } => match (mode, alignment) {
                (SrlScoring::Standard, _) => frames.clone(),
                (SrlScoring::Modified, Some(al)) => project_frames(frames, al, *len),
                (SrlScoring::Modified, None) => {
                    return Err(Error::invalid("completed-path frames need an alignment under modified scoring"));
                }
            },
        };
        let ps = arg_keys(&frames, modified);
        let gs = arg_keys(gf, false);
        if !modified && arg_keys(&frames, false).is_empty() {
            continue;
        }
        c += ps.intersection(&gs).count();
        p += ps.len();
        g += gs.len();
    }
    Ok(Prf::from_counts(c, p, g))
}

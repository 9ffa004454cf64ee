//! Greedy and beam decoding over any step-wise distribution model.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A model that maps a state and the previous token to a distribution over
/// the next token.
pub trait StepModel {
    type State: Clone;

    fn initial(&mut self) -> Result<Self::State>;

    /// Distribution over next-token ids and the successor state.
    fn step(&mut self, state: &Self::State, prev: usize) -> Result<(Vec<f64>, Self::State)>;

    fn start_token(&self) -> usize;

    fn end_token(&self) -> usize;

    /// Ids that may never be emitted.
    fn banned(&self, _id: usize) -> bool {
        false
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamHypothesis {
    /// Emitted ids, end token excluded.
    pub tokens: Vec<usize>,
    /// Probability of each emitted id when it was chosen.
    pub posteriors: Vec<f64>,
    /// Probability of the end token, for finished hypotheses.
    pub end_posterior: Option<f64>,
    /// Sum of log posteriors, end token included.
    pub score: f64,
    pub finished: bool,
}

impl BeamHypothesis {
    /// Length-normalised score used for the final ranking.
    pub fn normalized(&self) -> f64 {
        let n = self.tokens.len() + usize::from(self.finished);
        self.score / n.max(1) as f64
    }
}

/// Final ranking: normalised score descending, then raw score, then ids.
pub fn rank(hyps: &mut [BeamHypothesis]) {
    hyps.sort_by(|a, b| {
        b.normalized()
            .partial_cmp(&a.normalized())
            .unwrap_or(Ordering::Equal)
            .then_with(|| b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal))
            .then_with(|| a.tokens.cmp(&b.tokens))
            .then_with(|| a.finished.cmp(&b.finished))
    });
}

/// Highest-probability id that is not banned; ties go to the lower id.
fn argmax<M: StepModel>(m: &M, p: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &x) in p.iter().enumerate() {
        if m.banned(i) || x <= 0.0 {
            continue;
        }
        if best.map_or(true, |(_, b)| x > b) {
            best = Some((i, x));
        }
    }
    best.map(|(i, _)| i)
}

/// Greedy decoding; returns the emitted ids, their posteriors, and the end
/// posterior when decoding stopped on the end token.
pub fn greedy<M: StepModel>(m: &mut M, max_len: usize) -> Result<BeamHypothesis> {
    let mut state = m.initial()?;
    let mut prev = m.start_token();
    let mut h = BeamHypothesis {
        tokens: vec![],
        posteriors: vec![],
        end_posterior: None,
        score: 0.0,
        finished: false,
    };
    for _ in 0..max_len {
        let (p, next) = m.step(&state, prev)?;
        let Some(w) = argmax(m, &p) else { break };
        h.score += p[w].ln();
        if w == m.end_token() {
            h.end_posterior = Some(p[w]);
            h.finished = true;
            break;
        }
        h.tokens.push(w);
        h.posteriors.push(p[w]);
        state = next;
        prev = w;
    }
    Ok(h)
}

/// Beam search over log probabilities. Finished hypotheses stay in the beam
/// and compete on raw score; search stops when the beam holds only finished
/// hypotheses or after `max_len` steps. Returns at most `k` hypotheses ranked
/// by [`rank`].
pub fn beam_search<M: StepModel>(m: &mut M, k: usize, max_len: usize) -> Result<Vec<BeamHypothesis>> {
    if k == 0 {
        return Err(Error::invalid("beam width must be at least 1"));
    }
    struct Live<S> {
        hyp: BeamHypothesis,
        state: S,
        prev: usize,
    }
    let init = m.initial()?;
    let mut beam = vec![Live {
        hyp: BeamHypothesis {
            tokens: vec![],
            posteriors: vec![],
            end_posterior: None,
            score: 0.0,
            finished: false,
        },
        state: init,
        prev: m.start_token(),
    }];
    for _ in 0..max_len {
        if beam.iter().all(|l| l.hyp.finished) {
            break;
        }
        // (score, parent, token, prob, successor state); token None keeps a finished parent.
        let mut cands: Vec<(f64, usize, Option<usize>, f64, Option<M::State>)> = Vec::new();
        for (pi, live) in beam.iter().enumerate() {
            if live.hyp.finished {
                cands.push((live.hyp.score, pi, None, 1.0, None));
                continue;
            }
            let (p, next) = m.step(&live.state, live.prev)?;
            for (w, &pw) in p.iter().enumerate() {
                if pw > 0.0 && !m.banned(w) {
                    cands.push((live.hyp.score + pw.ln(), pi, Some(w), pw, Some(next.clone())));
                }
            }
        }
        cands.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        cands.truncate(k);
        let end = m.end_token();
        beam = cands
            .into_iter()
            .map(|(score, pi, w, pw, st)| {
                let parent = &beam[pi];
                let mut hyp = parent.hyp.clone();
                hyp.score = score;
                match w {
                    None => Live {
                        hyp,
                        state: parent.state.clone(),
                        prev: parent.prev,
                    },
                    Some(w) if w == end => {
                        hyp.finished = true;
                        hyp.end_posterior = Some(pw);
                        Live {
                            hyp,
                            state: parent.state.clone(),
                            prev: w,
                        }
                    }
                    Some(w) => {
                        hyp.tokens.push(w);
                        hyp.posteriors.push(pw);
                        Live {
                            hyp,
                            state: st.expect("successor state"),
                            prev: w,
                        }
                    }
                }
            })
            .collect();
    }
    let mut out: Vec<BeamHypothesis> = beam.into_iter().map(|l| l.hyp).collect();
    rank(&mut out);
    Ok(out)
}

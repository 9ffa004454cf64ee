//! Criterion 7: beam search, Viterbi and the probability selector against
//! brute-force references.

use std::cmp::Ordering;

use elhyb::completion::{beam_search, BeamHypothesis, StepModel};
use elhyb::rng::{seeded, Rng as Xrng};
use elhyb::selection::{align, project_frames, srl_select_probability, srl_select_rule};
use elhyb::understanding::{is_valid_bio, viterbi_bio, Argument, Predicate, Span, SrlFrame, TagSet};
use elhyb::Result;
use rand::Rng;

use crate::Verdict;

/// Random toy model: the next distribution is a fixed function of the whole
/// prefix, so beam states matter.
struct Toy {
    vocab: usize,
    seed: u64,
}

const START: usize = 0;
const END: usize = 1;

impl Toy {
    fn dist(&self, prefix: &[usize]) -> Vec<f64> {
        let mut h = self.seed;
        for &t in prefix {
            h = h.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(t as u64 + 1);
        }
        let mut rng = seeded(h);
        let mut p: Vec<f64> = (0..self.vocab)
            .map(|i| if i == START || rng.gen_bool(0.15) { 0.0 } else { rng.gen_range(0.01..1.0) })
            .collect();
        if p.iter().all(|&x| x == 0.0) {
            p[END] = 1.0;
        }
        let s: f64 = p.iter().sum();
        p.iter().map(|x| x / s).collect()
    }
}

impl StepModel for Toy {
    type State = Vec<usize>;
    fn initial(&mut self) -> Result<Vec<usize>> {
        Ok(vec![])
    }
    fn step(&mut self, prefix: &Vec<usize>, prev: usize) -> Result<(Vec<f64>, Vec<usize>)> {
        let mut next = prefix.clone();
        if prev != START {
            next.push(prev);
        }
        Ok((self.dist(&next), next))
    }
    fn start_token(&self) -> usize {
        START
    }
    fn end_token(&self) -> usize {
        END
    }
    fn banned(&self, id: usize) -> bool {
        id == START
    }
}

/// All sequences of at most `max_len` steps, finished or cut off.
fn enumerate(m: &Toy, max_len: usize) -> Vec<(Vec<usize>, bool, f64)> {
    let mut out = Vec::new();
    let mut frontier = vec![(vec![], 0.0f64)];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (prefix, score) in frontier {
            for (w, &p) in m.dist(&prefix).iter().enumerate() {
                if p <= 0.0 {
                    continue;
                }
                if w == END {
                    out.push((prefix.clone(), true, score + p.ln()));
                } else {
                    let mut q: Vec<usize> = prefix.clone();
                    q.push(w);
                    next.push((q, score + p.ln()));
                }
            }
        }
        frontier = next;
    }
    out.extend(frontier.into_iter().map(|(p, s)| (p, false, s)));
    let norm = |(t, f, s): &(Vec<usize>, bool, f64)| s / (t.len() + usize::from(*f)).max(1) as f64;
    out.sort_by(|a, b| {
        norm(b)
            .partial_cmp(&norm(a))
            .unwrap_or(Ordering::Equal)
            .then(b.2.partial_cmp(&a.2).unwrap_or(Ordering::Equal))
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    out
}

fn beam_vs_enumeration() -> (usize, usize) {
    let (mut cases, mut bad) = (0, 0);
    for seed in 0..200u64 {
        let vocab = 3 + (seed % 3) as usize; // 3..=5 ids, start and end included
        let mut m = Toy { vocab, seed };
        for max_len in 1..=3 {
            let all = enumerate(&m, max_len);
            let width = vocab.pow(max_len as u32);
            let got: Vec<BeamHypothesis> = beam_search(&mut m, width, max_len).unwrap();
            cases += 1;
            let same = got.len() == all.len()
                && got
                    .iter()
                    .zip(&all)
                    .all(|(g, (t, f, s))| g.tokens == *t && g.finished == *f && (g.score - s).abs() < 1e-12);
            if !same {
                bad += 1;
            }
        }
    }
    (cases, bad)
}

fn viterbi_vs_brute_force() -> (usize, usize) {
    let tags = TagSet::from_roles(&["A", "B"]);
    let k = tags.len();
    let mask = tags.transition_mask();
    let mut rng = seeded(77);
    let (mut cases, mut bad) = (0, 0);
    for _ in 0..400 {
        let n = rng.gen_range(1..=4);
        let dists: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let row: Vec<f64> = (0..k).map(|_| rng.gen_range(0.001..1.0)).collect();
                let s: f64 = row.iter().sum();
                row.into_iter().map(|x| x / s).collect()
            })
            .collect();
        let mut best: Option<(f64, Vec<usize>)> = None;
        for code in 0..k.pow(n as u32) {
            let path: Vec<usize> = (0..n).map(|i| code / k.pow(i as u32) % k).collect();
            let names: Vec<&str> = path.iter().map(|&t| tags.name(t)).collect();
            if !is_valid_bio(&names) {
                continue;
            }
            let score: f64 = path.iter().enumerate().map(|(i, &t)| dists[i][t].ln()).sum();
            if best.as_ref().map_or(true, |(b, _)| score > *b) {
                best = Some((score, path));
            }
        }
        cases += 1;
        if viterbi_bio(&dists, &mask) != best.unwrap().1 {
            bad += 1;
        }
    }
    (cases, bad)
}

const ROLES: [&str; 3] = ["ARG0", "ARG1", "ARGM-TMP"];
const WORDS: [&str; 6] = ["i", "do", "not", "like", "dogs", "now"];

fn random_frames(rng: &mut Xrng, len: usize) -> Vec<SrlFrame> {
    let mut frames = Vec::new();
    for _ in 0..rng.gen_range(0..=2) {
        let predicate = if rng.gen_bool(0.7) {
            Predicate::InUtterance(Span::single(rng.gen_range(0..len)))
        } else {
            Predicate::Context
        };
        if frames.iter().any(|f: &SrlFrame| f.predicate == predicate) {
            continue;
        }
        let mut f = SrlFrame::new(predicate);
        let mut i = 0;
        while i < len {
            if rng.gen_bool(0.4) {
                let end = rng.gen_range(i..len.min(i + 2));
                let span = Span::new(i, end);
                let clash = matches!(predicate, Predicate::InUtterance(p) if p.overlaps(&span));
                if !clash {
                    f.arguments.push(Argument {
                        role: ROLES[rng.gen_range(0..ROLES.len())].to_string(),
                        span,
                        context_side: false,
                    });
                }
                i = end + 1;
            } else {
                i += 1;
            }
        }
        frames.push(f);
    }
    frames
}

fn canonical(mut frames: Vec<SrlFrame>) -> Vec<SrlFrame> {
    for f in &mut frames {
        f.arguments.sort_by(|a, b| (a.span.start, a.span.end, &a.role, a.context_side).cmp(&(b.span.start, b.span.end, &b.role, b.context_side)));
    }
    frames.sort_by_key(|f| format!("{:?}", f.predicate));
    frames
}

/// Every completed-path argument wins its region; original arguments survive
/// only where no completed argument of the same frame overlaps them.
fn pure_completed(e: &[SrlFrame], c: &[SrlFrame], alignment: &[Option<usize>], clen: usize) -> Vec<SrlFrame> {
    let projected = project_frames(c, alignment, clen);
    if !e.iter().any(|f| matches!(f.predicate, Predicate::InUtterance(_))) {
        return projected;
    }
    let mut out = e.to_vec();
    for p in projected.into_iter().filter(|p| !p.arguments.is_empty()) {
        let k = match out.iter().position(|f| f.predicate == p.predicate) {
            Some(k) => k,
            None => {
                out.push(SrlFrame::new(p.predicate));
                out.len() - 1
            }
        };
        for a in p.arguments {
            out[k]
                .arguments
                .retain(|o| a.context_side || o.context_side || !o.span.overlaps(&a.span) || *o == a);
            if !out[k].arguments.contains(&a) {
                out[k].arguments.push(a);
            }
        }
    }
    out
}

fn selector_thresholds() -> (usize, usize) {
    let mut rng = seeded(99);
    let (mut cases, mut bad) = (0, 0);
    for _ in 0..2000 {
        let olen = rng.gen_range(1..=4);
        let original: Vec<String> = (0..olen).map(|_| WORDS[rng.gen_range(0..WORDS.len())].to_string()).collect();
        let mut completed = original.clone();
        for _ in 0..rng.gen_range(0..=3) {
            let at = rng.gen_range(0..=completed.len());
            completed.insert(at, WORDS[rng.gen_range(0..WORDS.len())].to_string());
        }
        let clen = completed.len();
        let al = align(&original, &completed);
        let fe = random_frames(&mut rng, olen);
        let fc = random_frames(&mut rng, clen);
        let post: Vec<f64> = (0..clen).map(|_| rng.gen_range(0.01..=1.0)).collect();

        let (high, _) = srl_select_probability(&fe, &fc, &post, &al, 1.0 + 1e-9).unwrap();
        let (rule, _) = srl_select_rule(&fe, &fc, &al, clen);
        let (low, _) = srl_select_probability(&fe, &fc, &post, &al, 0.0).unwrap();
        cases += 2;
        if high != rule {
            bad += 1;
        }
        if canonical(low) != canonical(pure_completed(&fe, &fc, &al, clen)) {
            bad += 1;
        }
    }
    (cases, bad)
}

pub fn all() -> Verdict {
    let (bc, bb) = beam_vs_enumeration();
    let (vc, vb) = viterbi_vs_brute_force();
    let (sc, sb) = selector_thresholds();
    Verdict::new(
        bb + vb + sb == 0,
        format!("beam {}/{bc}, viterbi {}/{vc}, tau thresholds {}/{sc} exact matches", bc - bb, vc - vb, sc - sb),
    )
}

//! Criteria 1 and 2: finite-difference gradient checks and distribution sums.

use std::time::Instant;

use elhyb::completion::{mixture, CompletionConfig, CompletionModel, MixtureMode};
use elhyb::corpus::vocab::SOS;
use elhyb::corpus::{build_vocab, DialogTurn, Vocabulary};
use elhyb::nn::{gradient_check, AdditiveAttention, BiLstm, HighwayLstmCell, Init, LstmCell, Mode, ParamStore, Tape};
use elhyb::rng::seeded;
use elhyb::selection::CombinedHead;
use elhyb::understanding::{DaClassifier, DaConfig, Span, SrlConfig, SrlTagger, TagSet};
use elhyb::Result;
use rand::Rng;

use crate::Verdict;

const EPS: f64 = 1e-5;
const MAX_REL: f64 = 1e-4;

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

fn vocab(words: &str) -> Vocabulary {
    let t = toks(words);
    build_vocab([t.as_slice()], 1, None).unwrap()
}

/// Redraws every parameter from U(-a, a). Default initialisations leave
/// many gradients near zero, where the relative error is all roundoff.
fn spread(store: &mut ParamStore, seed: u64, a: f64) {
    let mut rng = seeded(seed);
    for p in store.iter_mut() {
        for x in p.value.data_mut() {
            *x = rng.gen_range(-a..a);
        }
    }
}

fn check(name: &'static str, out: &mut Vec<(&'static str, f64)>, r: Result<f64>) {
    out.push((name, r.unwrap_or(f64::INFINITY)));
}

fn completion_model(copy: bool, mode: MixtureMode, layers: usize, seed: u64) -> CompletionModel {
    let cfg = CompletionConfig {
        embedding: 3,
        hidden: 4,
        layers,
        dropout: 0.0,
        copy,
        mixture: mode,
        history_depth: 1,
        max_len: 6,
    };
    CompletionModel::new(cfg, vocab("what is your favorite movie my is"), &mut seeded(seed)).unwrap()
}

pub fn fidelity() -> Verdict {
    let t = Instant::now();
    let mut errs: Vec<(&'static str, f64)> = Vec::new();

    // Elementwise and structural tape operations.
    let mut s = ParamStore::new();
    let mut rng = seeded(10);
    let w = s.add_init("w", &[3, 4], Init::Uniform(0.8), &mut rng).unwrap();
    let b = s.add_init("b", &[4], Init::Uniform(0.8), &mut rng).unwrap();
    let v = s.add_init("v", &[4], Init::Uniform(0.8), &mut rng).unwrap();
    check(
        "tape ops",
        &mut errs,
        gradient_check(&mut s, EPS, |t, s| {
            let x = t.constant(vec![0.4, -1.1, 0.7]);
            let z = t.affine(s, x, w, Some(b))?;
            let a = t.tanh(z);
            let g = t.sigmoid(z);
            let pv = t.param(s, v);
            let m = t.mul(a, pv)?;
            let mx = t.max(m, g)?;
            let d = t.sub(mx, a)?;
            let om = t.one_minus(g);
            let gate = t.slice(om, 1, 1)?;
            let sc = t.scale_by(d, gate)?;
            let c = t.concat(&[sc, a]);
            let c = t.scale(c, 0.7);
            let dr = t.dropout(c, vec![2.0, 0.0, 2.0, 2.0, 0.0, 2.0, 2.0, 2.0])?;
            let sm = t.softmax(dr);
            let sa = t.scatter_add(sm, vec![0, 1, 1, 2, 3, 0, 2, 4], 5)?;
            let padded = t.pad(sa, 6)?;
            let k = t.sum(padded);
            let nl = t.neg_log(sa, 2)?;
            let wsum = t.weighted_sum(sm, &[a, g, m, d, a, g, m, d])?;
            let xe = t.softmax_xent(wsum, 1)?;
            let be = t.bce_logits(z, vec![1.0, 0.0, 1.0, 0.0])?;
            t.sum_all(&[k, nl, xe, be])
        }),
    );

    // Embedding lookup feeding an LSTM cell over three steps.
    let mut s = ParamStore::new();
    let mut rng = seeded(11);
    let emb = s.add_init("emb", &[5, 3], Init::Uniform(0.8), &mut rng).unwrap();
    let cell = LstmCell::new(&mut s, "lstm", 3, 4, &mut rng).unwrap();
    spread(&mut s, 12, 0.8);
    check(
        "embedding + lstm cell",
        &mut errs,
        gradient_check(&mut s, EPS, |t, s| {
            let (mut h, mut c) = (t.zeros(4), t.zeros(4));
            for id in [1, 4, 2] {
                let x = t.embed(s, emb, id)?;
                (h, c) = cell.step(t, s, x, h, c)?;
            }
            let l = t.tanh(c);
            let hs = t.concat(&[h, l]);
            Ok(t.sum(hs))
        }),
    );

    let mut s = ParamStore::new();
    let mut rng = seeded(13);
    let cell = HighwayLstmCell::new(&mut s, "hw", 3, 4, &mut rng).unwrap();
    spread(&mut s, 14, 0.8);
    check(
        "highway lstm cell",
        &mut errs,
        gradient_check(&mut s, EPS, |t, s| {
            let (mut h, mut c) = (t.zeros(4), t.zeros(4));
            for x in [[0.5, -0.3, 1.0], [-0.9, 0.2, 0.4], [0.1, 0.8, -0.6]] {
                let x = t.constant(x.to_vec());
                (h, c) = cell.step(t, s, x, h, c)?;
            }
            let hc = t.concat(&[h, c]);
            t.softmax_xent(hc, 3)
        }),
    );

    let mut s = ParamStore::new();
    let mut rng = seeded(15);
    let enc = BiLstm::new(&mut s, "bi", 3, 4, 2, 0.0, &mut rng).unwrap();
    spread(&mut s, 16, 0.8);
    check(
        "bidirectional lstm",
        &mut errs,
        gradient_check(&mut s, EPS, |t, s| {
            let xs: Vec<_> = [[0.5, -0.3, 1.0], [-0.9, 0.2, 0.4], [0.1, 0.8, -0.6]]
                .iter()
                .map(|x| t.constant(x.to_vec()))
                .collect();
            let e = enc.encode(t, s, &xs, &mut Mode::Eval)?;
            let mut parts = e.outputs.clone();
            parts.extend(e.finals.iter().map(|f| f.h));
            let all = t.concat(&parts);
            t.softmax_xent(all, 5)
        }),
    );

    let mut s = ParamStore::new();
    let mut rng = seeded(17);
    let att = AdditiveAttention::new(&mut s, "att", 3, 4, 5, &mut rng).unwrap();
    let kw = s.add_init("kw", &[2, 4], Init::Uniform(0.8), &mut rng).unwrap();
    spread(&mut s, 18, 0.8);
    check(
        "additive attention",
        &mut errs,
        gradient_check(&mut s, EPS, |t, s| {
            let keys: Vec<_> = [[0.3, -0.7], [1.2, 0.1], [-0.4, 0.9]]
                .iter()
                .map(|k| {
                    let c = t.constant(k.to_vec());
                    t.affine(s, c, kw, None)
                })
                .collect::<Result<_>>()?;
            let proj = att.project_keys(t, s, &keys)?;
            let q = t.constant(vec![0.2, -0.5, 0.8]);
            let (ctx, weights, _) = att.attend(t, s, q, &keys, &proj)?;
            let a = t.neg_log(weights, 1)?;
            let b = t.sum(ctx);
            t.sum_all(&[a, b])
        }),
    );

    // Two composed decode steps with the copy mixture. Single-layer stacks:
    // deeper ones leave gradients whose finite differences are ulp-limited.
    for (name, mode) in [
        ("decode step, additive mixture", MixtureMode::Additive),
        ("decode step, softmax-concat mixture", MixtureMode::SoftmaxConcat),
    ] {
        let mut m = completion_model(true, mode, 1, 3);
        let context = vec![DialogTurn::system("what is your favorite movie")];
        let src = m.encode_input(&context, &toks("zorblat"));
        let target = src.copy_ids[src.copy_ids.len() - 2];
        let mut store = std::mem::take(&mut m.store);
        spread(&mut store, 1, 0.8);
        check(
            name,
            &mut errs,
            gradient_check(&mut store, EPS, |t, s| {
                let enc = m.encode(t, s, src.clone(), &mut Mode::Eval)?;
                let st = m.initial_state(&enc);
                let a = m.decode_step(t, s, &enc, SOS, &st, &mut Mode::Eval)?;
                let b = m.decode_step(t, s, &enc, target, &a.state, &mut Mode::Eval)?;
                let la = t.neg_log(a.p, target)?;
                let lb = t.neg_log(b.p, 5)?;
                t.sum_all(&[la, lb])
            }),
        );
    }

    let mut da = DaClassifier::new(
        DaConfig {
            embedding: 3,
            hidden: 4,
            layers: 1,
            dropout: 0.0,
            theta: 0.5,
            history_depth: 0,
        },
        vocab("i like cats okay"),
        &mut seeded(19),
    )
    .unwrap();
    let ids = da.input_ids(&[], &toks("i like cats")).unwrap();
    let mut store = std::mem::take(&mut da.store);
    spread(&mut store, 20, 0.8);
    let n = da.num_labels();
    check(
        "dialog-act classifier",
        &mut errs,
        gradient_check(&mut store, EPS, |t, s| {
            let (logits, _) = da.logits(t, s, &ids, &mut Mode::Eval)?;
            let mut y = vec![0.0; n];
            y[2] = 1.0;
            y[7] = 1.0;
            t.bce_logits(logits, y)
        }),
    );

    let mut srl = SrlTagger::new(
        SrlConfig {
            embedding: 3,
            indicator: 2,
            hidden: 4,
            layers: 2,
            dropout: 0.0,
        },
        vocab("i like cats"),
        TagSet::from_roles(&["ARG0", "ARG1"]),
        &mut seeded(21),
    )
    .unwrap();
    let mut store = std::mem::take(&mut srl.store);
    spread(&mut store, 22, 0.8);
    check(
        "srl tagger",
        &mut errs,
        gradient_check(&mut store, EPS, |t, s| {
            let em = srl.emissions(t, s, &toks("i like cats"), Some(Span::single(1)), &mut Mode::Eval)?;
            let losses = em
                .iter()
                .zip([1, 0, 3])
                .map(|(&e, y)| t.softmax_xent(e, y))
                .collect::<Result<Vec<_>>>()?;
            t.sum_all(&losses)
        }),
    );

    for (name, width) in [("combined head, sum", 4), ("combined head, max", 4), ("combined head, cat", 8)] {
        let mut s = ParamStore::new();
        let mut rng = seeded(23);
        let pe = s.add_init("pe", &[2, 4], Init::Uniform(0.8), &mut rng).unwrap();
        let pc = s.add_init("pc", &[2, 4], Init::Uniform(0.8), &mut rng).unwrap();
        let head = CombinedHead::new(&mut s, "head", width, 3, &mut rng).unwrap();
        spread(&mut s, 24, 0.8);
        check(
            name,
            &mut errs,
            gradient_check(&mut s, EPS, |t, s| {
                let x = t.constant(vec![0.6, -0.9]);
                let he = t.affine(s, x, pe, None)?;
                let he = t.tanh(he);
                let hc = t.affine(s, x, pc, None)?;
                let hc = t.tanh(hc);
                let h = match name {
                    "combined head, sum" => t.add(he, hc)?,
                    "combined head, max" => t.max(he, hc)?,
                    _ => t.concat(&[he, hc]),
                };
                let logits = head.apply(t, s, h)?;
                t.bce_logits(logits, vec![1.0, 0.0, 1.0])
            }),
        );
    }

    let secs = t.elapsed().as_secs_f64();
    let (worst_name, worst) = errs
        .iter()
        .copied()
        .fold(("", 0.0f64), |acc, (n, e)| if e > acc.1 || e.is_nan() { (n, e) } else { acc });
    let pass = errs.iter().all(|&(_, e)| e < MAX_REL) && secs < 30.0;
    Verdict::new(
        pass,
        format!(
            "{} checks, max relative error {worst:.2e} ({worst_name}), limit {MAX_REL:.0e}; {secs:.1} s of 30 s",
            errs.len()
        ),
    )
}

const DRAWS: usize = 1000;
const SUM_TOL: f64 = 1e-9;

struct Worst {
    dev: f64,
    negative: usize,
}

impl Worst {
    fn see(&mut self, p: &[f64]) {
        let s: f64 = p.iter().sum();
        self.dev = self.dev.max((s - 1.0).abs());
        self.negative += p.iter().filter(|&&x| x < 0.0 || x.is_nan()).count();
    }
}

pub fn distributions() -> Verdict {
    let mut rng = seeded(2024);
    let words = ["i", "like", "cats", "dogs", "what", "is", "your", "favorite", "zorblat", "quux", "okay"];
    let draw_tokens = |rng: &mut elhyb::rng::Rng, n: usize| -> Vec<String> {
        (0..n).map(|_| words[rng.gen_range(0..words.len())].to_string()).collect()
    };
    let mut attention = Worst { dev: 0.0, negative: 0 };
    let mut p_gen = Worst { dev: 0.0, negative: 0 };
    let mut final_p = Worst { dev: 0.0, negative: 0 };
    let mut emissions = Worst { dev: 0.0, negative: 0 };
    let mut plain = Worst { dev: 0.0, negative: 0 };
    let mut lambda_out = 0usize;

    let per_model = 25;
    let mut model = None;
    let mut tagger = None;
    for d in 0..DRAWS {
        if d % per_model == 0 {
            let scale = rng.gen_range(0.3..4.0);
            let mode = if d / per_model % 2 == 0 {
                MixtureMode::Additive
            } else {
                MixtureMode::SoftmaxConcat
            };
            let mut m = completion_model(true, mode, 2, d as u64);
            spread(&mut m.store, d as u64 + 7, scale);
            model = Some(m);
            let mut t = SrlTagger::new(
                SrlConfig {
                    embedding: 4,
                    indicator: 2,
                    hidden: 6,
                    layers: 2,
                    dropout: 0.0,
                },
                vocab("i like cats dogs okay"),
                TagSet::roles(),
                &mut seeded(d as u64),
            )
            .unwrap();
            spread(&mut t.store, d as u64 + 9, scale);
            tagger = Some(t);
        }
        let m = model.as_ref().unwrap();
        let n = rng.gen_range(1..5);
        let source = draw_tokens(&mut rng, n);
        let context = vec![DialogTurn::system(&draw_tokens(&mut rng, 3).join(" "))];
        let mut tape = Tape::new();
        let enc = m.encode(&mut tape, &m.store, m.encode_input(&context, &source), &mut Mode::Eval).unwrap();
        let mut state = m.initial_state(&enc);
        let mut prev = SOS;
        for _ in 0..2 {
            let sv = m.decode_step(&mut tape, &m.store, &enc, prev, &state, &mut Mode::Eval).unwrap();
            let out = CompletionModel::step_output(&tape, &sv);
            attention.see(&out.attention);
            p_gen.see(&out.p_gen);
            final_p.see(&out.p);
            if !(0.0..=1.0).contains(&out.lambda) {
                lambda_out += 1;
            }
            prev = rng.gen_range(0..out.p.len());
            state = sv.state;
        }

        let t = tagger.as_ref().unwrap();
        let toks = draw_tokens(&mut rng, n);
        let pred = (rng.gen_bool(0.5)).then(|| Span::single(rng.gen_range(0..n)));
        for row in t.forward(&toks, pred).unwrap() {
            emissions.see(&row);
        }

        // The plain mixture on random normalised inputs.
        let k = rng.gen_range(1..6);
        let g = rng.gen_range(2..8);
        let norm = |v: Vec<f64>| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect::<Vec<_>>()
        };
        let gen = norm((0..g).map(|_| rng.gen_range(1e-6..1.0)).collect());
        let attn = norm((0..k).map(|_| rng.gen_range(1e-6..1.0)).collect());
        let ext = g + rng.gen_range(0..3);
        let copy_ids: Vec<usize> = (0..k).map(|_| rng.gen_range(0..ext)).collect();
        let lambda = rng.gen_range(0.0..=1.0);
        plain.see(&mixture(lambda, &gen, &attn, &copy_ids, ext, MixtureMode::Additive).unwrap());
        let logits: Vec<f64> = (0..g).map(|_| rng.gen_range(-8.0..8.0)).collect();
        let scores: Vec<f64> = (0..k).map(|_| rng.gen_range(-8.0..8.0)).collect();
        plain.see(&mixture(lambda, &logits, &scores, &copy_ids, ext, MixtureMode::SoftmaxConcat).unwrap());
    }

    let all = [&attention, &p_gen, &final_p, &emissions, &plain];
    let dev = all.iter().map(|w| w.dev).fold(0.0, f64::max);
    let neg: usize = all.iter().map(|w| w.negative).sum();
    Verdict::new(
        dev <= SUM_TOL && neg == 0 && lambda_out == 0,
        format!(
            "{DRAWS} draws; max |sum - 1|: attention {:.1e}, P_gen {:.1e}, P {:.1e}, SRL {:.1e}, mixture {:.1e}; {neg} negative entries",
            attention.dev, p_gen.dev, final_p.dev, emissions.dev, plain.dev
        ),
    )
}

//! Criterion 8: metrics on small corpora with hand-computed values.

use elhyb::eval::{bleu, exact_match, multilabel_prf, srl_span_prf, word_prf, Averaging, PredictedFrames, SrlScoring};
use elhyb::selection::align;
use elhyb::understanding::{Predicate, Span, SrlFrame};

use crate::Verdict;

const TOL: f64 = 1e-9;

fn t(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

fn frame(p: Predicate, args: &[(&str, usize, usize)]) -> SrlFrame {
    let a: Vec<(&str, Span)> = args.iter().map(|&(r, s, e)| (r, Span::new(s, e))).collect();
    SrlFrame::with_args(p, &a)
}

struct Sheet {
    checks: usize,
    failures: Vec<String>,
}

impl Sheet {
    fn close(&mut self, what: &str, got: f64, want: f64) {
        self.checks += 1;
        if (got - want).abs() > TOL || got.is_nan() {
            self.failures.push(format!("{what}: {got} != {want}"));
        }
    }
}

pub fn all() -> Verdict {
    let mut s = Sheet {
        checks: 0,
        failures: vec![],
    };

    // BLEU-4, corpus level, add-one smoothing from bigrams up.
    // "i like dogs" vs "i like cats": p1 2/3, p2 (1+1)/(2+1), p3 (0+1)/(1+1), p4 1/1; c = r.
    let b = bleu(&[t("i like dogs")], &[t("i like cats")], 4).unwrap();
    s.close("bleu mismatch", b, (2.0f64 / 9.0).powf(0.25));
    // Clipping: "the the the" vs "the cat": p1 1/3, p2 1/3, p3 1/2, p4 1; c > r.
    let b = bleu(&[t("the the the")], &[t("the cat")], 4).unwrap();
    s.close("bleu clipping", b, (1.0f64 / 18.0).powf(0.25));
    // Brevity: two sentences, every n-gram matched, c = 4 and r = 6.
    let b = bleu(&[t("i like cats"), t("yes")], &[t("i like cats a lot"), t("yes")], 4).unwrap();
    s.close("bleu brevity", b, (-0.5f64).exp());

    let hyps = [t("a b"), t("c"), t("d e")];
    let refs = [t("a b"), t("c d"), t("d e")];
    s.close("exact match", exact_match(&hyps, &refs).unwrap(), 2.0 / 3.0);

    // Overlap 2 of 3 predicted and 4 gold, then 1 of 1 and 2: P 3/4, R 3/6.
    let w = word_prf(&[t("i like it"), t("no")], &[t("i like the movie"), t("no no")]).unwrap();
    s.close("word precision", w.precision, 0.75);
    s.close("word recall", w.recall, 0.5);
    s.close("word f1", w.f1, 0.6);

    // pred {1,2} {3} {}; gold {1} {3,4} {2}
    let pred = vec![vec![1, 2], vec![3], vec![]];
    let gold = vec![vec![1], vec![3, 4], vec![2]];
    let mi = multilabel_prf(&pred, &gold, Averaging::Micro).unwrap();
    s.close("multilabel micro precision", mi.precision, 2.0 / 3.0);
    s.close("multilabel micro recall", mi.recall, 0.5);
    s.close("multilabel micro f1", mi.f1, 4.0 / 7.0);
    // per label (P, R, F1): 1 (1,1,1), 2 (0,0,0), 3 (1,1,1), 4 (0,0,0)
    let ma = multilabel_prf(&pred, &gold, Averaging::Macro).unwrap();
    s.close("multilabel macro precision", ma.precision, 0.5);
    s.close("multilabel macro recall", ma.recall, 0.5);
    s.close("multilabel macro f1", ma.f1, 0.5);

    // Span scoring: one right argument, one short span, one spurious role.
    let v = Predicate::InUtterance(Span::single(1));
    let g = vec![frame(v, &[("ARG0", 0, 0), ("ARG1", 2, 3)])];
    let p = vec![frame(v, &[("ARG0", 0, 0), ("ARG1", 2, 2), ("ARGM-TMP", 4, 4)])];
    let r = srl_span_prf(&[PredictedFrames::Original(p)], &[g.clone()], SrlScoring::Modified).unwrap();
    s.close("span precision", r.precision, 1.0 / 3.0);
    s.close("span recall", r.recall, 0.5);
    s.close("span f1", r.f1, 0.4);

    // Empty-output penalty in isolation: the second utterance predicts
    // nothing against one gold argument. Standard scoring skips it.
    let g2 = vec![frame(Predicate::Context, &[("ARG1", 0, 0)])];
    let preds = [PredictedFrames::Original(g.clone()), PredictedFrames::Original(vec![])];
    let golds = [g.clone(), g2.clone()];
    let st = srl_span_prf(&preds, &golds, SrlScoring::Standard).unwrap();
    let md = srl_span_prf(&preds, &golds, SrlScoring::Modified).unwrap();
    s.close("standard recall without penalty", st.recall, 1.0);
    s.close("modified recall with penalty", md.recall, 2.0 / 3.0);
    s.close("modified f1 with penalty", md.f1, 0.8);

    // Corresponding parts in isolation: "pizza" completed to "i like pizza".
    // Only the argument over "pizza" maps back; "i" and the predicate are
    // completed-in material.
    let al = align(&t("pizza"), &t("i like pizza"));
    let on_completed = frame(Predicate::InUtterance(Span::single(1)), &[("ARG0", 0, 0), ("ARG1", 2, 2)]);
    let md = srl_span_prf(
        &[PredictedFrames::Completed {
            frames: vec![on_completed.clone()],
            len: 3,
            alignment: Some(al),
        }],
        &[g2.clone()],
        SrlScoring::Modified,
    )
    .unwrap();
    s.close("corresponding-parts precision", md.precision, 1.0);
    s.close("corresponding-parts recall", md.recall, 1.0);
    let st = srl_span_prf(
        &[PredictedFrames::Completed {
            frames: vec![on_completed],
            len: 3,
            alignment: None,
        }],
        &[g2],
        SrlScoring::Standard,
    )
    .unwrap();
    s.close("whole-utterance precision", st.precision, 0.0);

    Verdict::new(
        s.failures.is_empty(),
        if s.failures.is_empty() {
            format!("{} hand-computed values reproduced to {TOL:.0e}", s.checks)
        } else {
            s.failures.join("; ")
        },
    )
}

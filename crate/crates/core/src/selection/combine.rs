//! Dialog-act combinators: logits-based, hidden-state-based (with a jointly
//! trained head) and the expert short-circuit.

use serde::{Deserialize, Serialize};

use super::config::{SelectionConfig, SelectionMethod};
use crate::corpus::inventory::DIALOG_ACTS;
use crate::corpus::vocab::Vocabulary;
use crate::corpus::DialogTurn;
use crate::error::{Error, Result};
use crate::nn::{dropout, run_epochs, sigmoid, Checkpoint, Init, Mode, Optimizer, ParamId, ParamStore, Schedule, Tape, Var};
use crate::rng::Rng;
use crate::understanding::da::{da_decide, encode_utterance, label_targets, read_meta, ClassifierReport, DaConfig, DaEncoder, DaPrediction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogitsMode {
    Sum,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HiddenMode {
    Sum,
    Max,
    Cat,
}

impl HiddenMode {
    pub fn input_width(self, h: usize) -> usize {
        match self {
            HiddenMode::Cat => 2 * h,
            _ => h,
        }
    }
}

fn same_len(op: &'static str, a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Shape {
            op,
            left: vec![a.len()],
            right: vec![b.len()],
        });
    }
    Ok(())
}

/// Elementwise sum or max of two per-label probability vectors.
pub fn combine_logits(d_e: &[f64], d_c: &[f64], mode: LogitsMode) -> Result<Vec<f64>> {
    same_len("combine_logits", d_e, d_c)?;
    Ok(d_e
        .iter()
        .zip(d_c)
        .map(|(&a, &b)| match mode {
            LogitsMode::Sum => a + b,
            LogitsMode::Max => a.max(b),
        })
        .collect())
}

/// Decision threshold for a combined vector: sum mode doubles θ.
pub fn combined_theta(method: SelectionMethod, theta: f64) -> f64 {
    match method {
        SelectionMethod::LogitsSum => 2.0 * theta,
        _ => theta,
    }
}

pub fn combine_states(h_e: &[f64], h_c: &[f64], mode: HiddenMode) -> Result<Vec<f64>> {
    same_len("combine_hidden", h_e, h_c)?;
    Ok(match mode {
        HiddenMode::Sum => h_e.iter().zip(h_c).map(|(a, b)| a + b).collect(),
        HiddenMode::Max => h_e.iter().zip(h_c).map(|(a, b)| a.max(*b)).collect(),
        HiddenMode::Cat => h_e.iter().chain(h_c).copied().collect(),
    })
}

/// `D = sigmoid(W H + b)` over the combined representation.
#[derive(Clone, Debug)]
pub struct CombinedHead {
    pub w: ParamId,
    pub b: ParamId,
    pub input: usize,
    pub output: usize,
}

impl CombinedHead {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, output: usize, rng: &mut Rng) -> Result<Self> {
        let w = store.add_init(&format!("{name}.w"), &[input, output], Init::Xavier, rng)?;
        let b = store.add_init(&format!("{name}.b"), &[output], Init::Zeros, rng)?;
        Ok(CombinedHead { w, b, input, output })
    }

    pub fn apply(&self, tape: &mut Tape, store: &ParamStore, h: Var) -> Result<Var> {
        tape.affine(store, h, self.w, Some(self.b))
    }
}

pub fn combine_hidden(h_e: &[f64], h_c: &[f64], mode: HiddenMode, head: &CombinedHead, store: &ParamStore) -> Result<Vec<f64>> {
    let h = combine_states(h_e, h_c, mode)?;
    if h.len() != head.input {
        return Err(Error::Shape {
            op: "combine_hidden head",
            left: vec![h.len()],
            right: vec![head.input, head.output],
        });
    }
    let mut tape = Tape::new();
    let x = tape.constant(h);
    let z = head.apply(&mut tape, store, x)?;
    Ok(tape.value(z).iter().map(|&v| sigmoid(v)).collect())
}

fn on_tape(tape: &mut Tape, h_e: Var, h_c: Var, mode: HiddenMode) -> Result<Var> {
    match mode {
        HiddenMode::Sum => tape.add(h_e, h_c),
        HiddenMode::Max => tape.max(h_e, h_c),
        HiddenMode::Cat => Ok(tape.concat(&[h_e, h_c])),
    }
}

/// Two separate encoders (original and completed utterance) feeding one
/// [`CombinedHead`], trained under a single loss.
#[derive(Clone, Debug)]
pub struct JointDaModel {
    pub config: DaConfig,
    pub mode: HiddenMode,
    pub vocab: Vocabulary,
    pub store: ParamStore,
    pub el: DaEncoder,
    pub cmp: DaEncoder,
    pub head: CombinedHead,
}

/// A training or test instance seen by both paths.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedInstance {
    pub context: Vec<DialogTurn>,
    pub original: Vec<String>,
    pub completed: Vec<String>,
    pub labels: Vec<usize>,
}

impl JointDaModel {
    pub fn new(config: DaConfig, mode: HiddenMode, vocab: Vocabulary, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new();
        let el = DaEncoder::new(&mut store, "el", vocab.len(), &config, rng)?;
        let cmp = DaEncoder::new(&mut store, "cmp", vocab.len(), &config, rng)?;
        let head = CombinedHead::new(&mut store, "head", mode.input_width(config.hidden), DIALOG_ACTS.len(), rng)?;
        Ok(JointDaModel {
            config,
            mode,
            vocab,
            store,
            el,
            cmp,
            head,
        })
    }

    fn ids(&self, context: &[DialogTurn], u: &[String]) -> Result<Vec<usize>> {
        encode_utterance(&self.vocab, context, u, self.config.history_depth)
    }

    fn logits(&self, tape: &mut Tape, store: &ParamStore, e: &[usize], c: &[usize], mode: &mut Mode) -> Result<(Var, Var, Var)> {
        let he = self.el.encode(tape, store, e, mode)?;
        let hc = self.cmp.encode(tape, store, c, mode)?;
        let h = on_tape(tape, he, hc, self.mode)?;
        let h = dropout(tape, h, self.config.dropout, mode)?;
        Ok((self.head.apply(tape, store, h)?, he, hc))
    }

    /// `(H_E, H_C)` as predictions (no per-path probabilities) and the combined D.
    pub fn forward(&self, context: &[DialogTurn], original: &[String], completed: &[String]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let e = self.ids(context, original)?;
        let c = self.ids(context, completed)?;
        let mut tape = Tape::new();
        let (z, he, hc) = self.logits(&mut tape, &self.store, &e, &c, &mut Mode::Eval)?;
        Ok((
            tape.value(he).to_vec(),
            tape.value(hc).to_vec(),
            tape.value(z).iter().map(|&v| sigmoid(v)).collect(),
        ))
    }

    pub fn to_checkpoint(&self, meta_extra: serde_json::Value) -> Checkpoint {
        let meta = serde_json::json!({
            "kind": "joint_da",
            "config": self.config,
            "mode": self.mode,
            "vocab": self.vocab,
            "extra": meta_extra,
        });
        Checkpoint::with_params(meta, &self.store)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let (config, vocab) = read_meta::<DaConfig>(ck, "joint_da")?;
        let mode: HiddenMode =
            serde_json::from_value(ck.meta["mode"].clone()).map_err(|e| Error::Checkpoint(format!("mode: {e}")))?;
        let mut m = JointDaModel::new(config, mode, vocab, &mut crate::rng::seeded(0))?;
        ck.restore_params(&mut m.store)?;
        Ok(m)
    }
}

pub fn joint_train(
    model: &mut JointDaModel,
    data: &[PairedInstance],
    schedule: &Schedule,
    opt: &mut Optimizer,
    rng: &mut Rng,
) -> Result<ClassifierReport> {
    let n = DIALOG_ACTS.len();
    let prepared = data
        .iter()
        .map(|d| {
            if d.labels.iter().any(|&l| l >= n) {
                return Err(Error::invalid("dialog-act label outside the inventory"));
            }
            Ok((
                model.ids(&d.context, &d.original)?,
                model.ids(&d.context, &d.completed)?,
                label_targets(&d.labels, n),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut store = std::mem::take(&mut model.store);
    let m: &JointDaModel = model;
    let result = run_epochs(&mut store, prepared.len(), schedule, opt, rng, |tape, store, i, mode| {
        let (e, c, t) = &prepared[i];
        let (z, _, _) = m.logits(tape, store, e, c, mode)?;
        Ok((tape.bce_logits(z, t.clone())?, n as f64))
    });
    model.store = store;
    Ok(ClassifierReport {
        epoch_losses: result?,
        examples: data.len(),
    })
}

/// Which path produced a dialog-act decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DaRoute {
    /// The original-path prediction contained a non-completable act.
    Expert,
    Combined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DaSelection {
    pub labels: Vec<usize>,
    pub route: DaRoute,
}

/// Final label set for one utterance.
///
/// `pred_e.probs` must come from the original-path classifier; it feeds the
/// expert check. For logits methods the combined vector is built from both
/// `probs`; for hidden methods `combined` must carry the joint model's D.
pub fn da_select(
    pred_e: &DaPrediction,
    pred_c: &DaPrediction,
    combined: Option<&[f64]>,
    config: &SelectionConfig,
) -> Result<DaSelection> {
    same_len("da_select", &pred_e.probs, &pred_c.probs)?;
    if config.expert {
        let e = da_decide(&pred_e.probs, config.theta);
        if e.iter().any(|l| config.non_completable.contains(l)) {
            return Ok(DaSelection {
                labels: e,
                route: DaRoute::Expert,
            });
        }
    }
    let d = match config.method {
        SelectionMethod::LogitsSum => combine_logits(&pred_e.probs, &pred_c.probs, LogitsMode::Sum)?,
        SelectionMethod::LogitsMax => combine_logits(&pred_e.probs, &pred_c.probs, LogitsMode::Max)?,
        _ => combined
            .ok_or_else(|| Error::invalid("hidden-state selection needs the joint model's output"))?
            .to_vec(),
    };
    Ok(DaSelection {
        labels: da_decide(&d, combined_theta(config.method, config.theta)),
        route: DaRoute::Combined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::inventory::act_id;
    use crate::rng::seeded;

    fn pred(probs: Vec<f64>) -> DaPrediction {
        DaPrediction { probs, hidden: vec![] }
    }

    #[test]
    fn logits_examples() {
        let d = vec![0.3, 0.9, 0.1];
        let s = combine_logits(&d, &d, LogitsMode::Sum).unwrap();
        assert_eq!(s, vec![0.6, 1.8, 0.2]);
        assert_eq!(combine_logits(&[0.9, 0.1], &[0.2, 0.8], LogitsMode::Max).unwrap(), vec![0.9, 0.8]);
        assert_eq!(
            combine_logits(&[0.9, 0.1], &[0.2, 0.8], LogitsMode::Sum).unwrap(),
            combine_logits(&[0.2, 0.8], &[0.9, 0.1], LogitsMode::Sum).unwrap()
        );
        assert!(combine_logits(&[0.1], &[0.1, 0.2], LogitsMode::Sum).is_err());
    }

    #[test]
    fn sum_of_clones_decides_like_one() {
        let d = vec![0.7, 0.2, 0.5, 0.49];
        let s = combine_logits(&d, &d, LogitsMode::Sum).unwrap();
        assert_eq!(da_decide(&s, combined_theta(SelectionMethod::LogitsSum, 0.5)), da_decide(&d, 0.5));
    }

    #[test]
    fn hidden_examples() {
        let mut store = ParamStore::new();
        let mut rng = seeded(1);
        let he = vec![0.5, -1.0, 2.0];
        assert_eq!(combine_states(&he, &he, HiddenMode::Sum).unwrap(), vec![1.0, -2.0, 4.0]);
        assert_eq!(combine_states(&he, &he, HiddenMode::Max).unwrap(), he);
        assert_eq!(combine_states(&he, &he, HiddenMode::Cat).unwrap().len(), 6);
        let head = CombinedHead::new(&mut store, "h", 6, 4, &mut rng).unwrap();
        for p in store.iter_mut() {
            p.value.fill(0.0);
        }
        assert_eq!(combine_hidden(&he, &he, HiddenMode::Cat, &head, &store).unwrap(), vec![0.5; 4]);
        assert!(combine_hidden(&he, &he, HiddenMode::Sum, &head, &store).is_err());
    }

    #[test]
    fn expert_short_circuit() {
        let cfg = SelectionConfig::default();
        let n = DIALOG_ACTS.len();
        let hold = act_id("hold").unwrap();
        let mut e = vec![0.0; n];
        e[hold] = 0.9;
        let mut c = vec![0.0; n];
        c[act_id("positive_answer").unwrap()] = 0.99;
        let s = da_select(&pred(e.clone()), &pred(c.clone()), None, &cfg).unwrap();
        assert_eq!(s.labels, vec![hold]);
        assert_eq!(s.route, DaRoute::Expert);

        let off = SelectionConfig {
            expert: false,
            ..SelectionConfig::default()
        };
        let s = da_select(&pred(e), &pred(c), None, &off).unwrap();
        assert_eq!(s.route, DaRoute::Combined);
        assert_eq!(s.labels, vec![act_id("positive_answer").unwrap()]);
    }

    #[test]
    fn completed_path_dominates_sum() {
        let cfg = SelectionConfig::default();
        let n = DIALOG_ACTS.len();
        let (st, op) = (act_id("statement").unwrap(), act_id("opinion").unwrap());
        let mut e = vec![0.0; n];
        e[st] = 0.6;
        e[op] = 0.3;
        let mut c = vec![0.0; n];
        c[st] = 0.1;
        c[op] = 0.95;
        let s = da_select(&pred(e), &pred(c), None, &cfg).unwrap();
        assert_eq!(s.labels, vec![op]);
    }

    #[test]
    fn hidden_method_needs_combined() {
        let cfg = SelectionConfig {
            method: SelectionMethod::HiddenCat,
            expert: false,
            ..SelectionConfig::default()
        };
        let p = pred(vec![0.2; DIALOG_ACTS.len()]);
        assert!(da_select(&p, &p, None, &cfg).is_err());
        let mut d = vec![0.0; DIALOG_ACTS.len()];
        d[4] = 0.7;
        assert_eq!(da_select(&p, &p, Some(&d), &cfg).unwrap().labels, vec![4]);
    }
}

//! Multi-label dialog-act classifier over a pooled bidirectional encoding.

use serde::{Deserialize, Serialize};

use crate::corpus::inventory::DIALOG_ACTS;
use crate::corpus::vocab::{encode_source, Vocabulary};
use crate::corpus::DialogTurn;
use crate::error::{Error, Result};
use crate::nn::{dropout, run_epochs, BiLstm, Checkpoint, Init, Mode, Optimizer, ParamId, ParamStore, Schedule, Tape, Var};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DaConfig {
    pub embedding: usize,
    pub hidden: usize,
    pub layers: usize,
    pub dropout: f64,
    /// Decision threshold on per-label probabilities.
    pub theta: f64,
    /// Previous turns fed to the encoder before the utterance.
    pub history_depth: usize,
}

impl Default for DaConfig {
    fn default() -> Self {
        DaConfig {
            embedding: 32,
            hidden: 64,
            layers: 2,
            dropout: 0.1,
            theta: 0.5,
            history_depth: 0,
        }
    }
}

impl DaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.hidden % 2 != 0 {
            return Err(Error::Config("dialog-act hidden size must be even and positive".into()));
        }
        if self.embedding == 0 || self.layers == 0 {
            return Err(Error::Config("dialog-act embedding and layers must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config("dropout must lie in [0, 1)".into()));
        }
        if !(self.theta >= 0.0) {
            return Err(Error::Config("theta must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Per-label probabilities `probs` (D) and pooled representation `hidden` (H).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DaPrediction {
    pub probs: Vec<f64>,
    pub hidden: Vec<f64>,
}

/// `{l : D_l >= θ}`, falling back to the lowest-id argmax when empty.
pub fn da_decide(probs: &[f64], theta: f64) -> Vec<usize> {
    let set: Vec<usize> = (0..probs.len()).filter(|&i| probs[i] >= theta).collect();
    if !set.is_empty() || probs.is_empty() {
        return set;
    }
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    vec![best]
}

/// Embedding table plus bidirectional encoder; H is the concatenation of the
/// top layer's final forward and backward states.
#[derive(Clone, Debug)]
pub struct DaEncoder {
    pub embed: ParamId,
    pub encoder: BiLstm,
    pub dropout: f64,
}

impl DaEncoder {
    pub fn new(store: &mut ParamStore, name: &str, vocab_len: usize, cfg: &DaConfig, rng: &mut Rng) -> Result<Self> {
        let embed = store.add_init(&format!("{name}.embed"), &[vocab_len, cfg.embedding], Init::Uniform(0.1), rng)?;
        let encoder = BiLstm::new(
            store,
            &format!("{name}.enc"),
            cfg.embedding,
            cfg.hidden,
            cfg.layers,
            cfg.dropout,
            rng,
        )?;
        Ok(DaEncoder {
            embed,
            encoder,
            dropout: cfg.dropout,
        })
    }

    pub fn encode(&self, tape: &mut Tape, store: &ParamStore, ids: &[usize], mode: &mut Mode) -> Result<Var> {
        if ids.is_empty() {
            return Err(Error::invalid("cannot encode an empty utterance"));
        }
        let mut xs = Vec::with_capacity(ids.len());
        for &id in ids {
            let e = tape.embed(store, self.embed, id)?;
            xs.push(dropout(tape, e, self.dropout, mode)?);
        }
        let enc = self.encoder.encode(tape, store, &xs, mode)?;
        Ok(enc.finals.last().expect("at least one layer").h)
    }
}

/// Input ids for a dialog-act or SRL encoder: the last `depth` context turns
/// each followed by `<sep>`, then the utterance. No end marker.
pub fn encode_utterance(vocab: &Vocabulary, context: &[DialogTurn], utterance: &[String], depth: usize) -> Result<Vec<usize>> {
    if utterance.is_empty() {
        return Err(Error::invalid("empty utterance"));
    }
    let mut ids = encode_source(vocab, context, utterance, depth).ids;
    ids.pop();
    Ok(ids)
}

#[derive(Clone, Debug)]
pub struct DaClassifier {
    pub config: DaConfig,
    pub vocab: Vocabulary,
    pub store: ParamStore,
    pub encoder: DaEncoder,
    head_w: ParamId,
    head_b: ParamId,
}

/// Training report shared by the classifier trainers.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    /// Mean loss per scored unit (label or token), one entry per epoch.
    pub epoch_losses: Vec<f64>,
    pub examples: usize,
}

/// One dialog-act training instance: an utterance with its gold label ids.
#[derive(Clone, Debug, PartialEq)]
pub struct DaInstance {
    pub context: Vec<DialogTurn>,
    pub utterance: Vec<String>,
    pub labels: Vec<usize>,
}

pub fn label_targets(labels: &[usize], n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n];
    for &l in labels {
        t[l] = 1.0;
    }
    t
}

impl DaClassifier {
    pub fn new(config: DaConfig, vocab: Vocabulary, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new();
        let encoder = DaEncoder::new(&mut store, "da", vocab.len(), &config, rng)?;
        let head_w = store.add_init("da.head.w", &[config.hidden, DIALOG_ACTS.len()], Init::Xavier, rng)?;
        let head_b = store.add_init("da.head.b", &[DIALOG_ACTS.len()], Init::Zeros, rng)?;
        Ok(DaClassifier {
            config,
            vocab,
            store,
            encoder,
            head_w,
            head_b,
        })
    }

    pub fn num_labels(&self) -> usize {
        DIALOG_ACTS.len()
    }

    pub fn input_ids(&self, context: &[DialogTurn], utterance: &[String]) -> Result<Vec<usize>> {
        encode_utterance(&self.vocab, context, utterance, self.config.history_depth)
    }

    /// Returns `(logits, H)` on the tape.
    pub fn logits(&self, tape: &mut Tape, store: &ParamStore, ids: &[usize], mode: &mut Mode) -> Result<(Var, Var)> {
        let h = self.encoder.encode(tape, store, ids, mode)?;
        let hd = dropout(tape, h, self.config.dropout, mode)?;
        let z = tape.affine(store, hd, self.head_w, Some(self.head_b))?;
        Ok((z, h))
    }

    pub fn forward(&self, context: &[DialogTurn], utterance: &[String]) -> Result<DaPrediction> {
        let ids = self.input_ids(context, utterance)?;
        let mut tape = Tape::new();
        let (z, h) = self.logits(&mut tape, &self.store, &ids, &mut Mode::Eval)?;
        Ok(DaPrediction {
            probs: tape.value(z).iter().map(|&x| crate::nn::sigmoid(x)).collect(),
            hidden: tape.value(h).to_vec(),
        })
    }

    pub fn decide(&self, pred: &DaPrediction) -> Vec<usize> {
        da_decide(&pred.probs, self.config.theta)
    }

    pub fn to_checkpoint(&self, meta_extra: serde_json::Value) -> Checkpoint {
        let meta = serde_json::json!({
            "kind": "da",
            "config": self.config,
            "vocab": self.vocab,
            "extra": meta_extra,
        });
        Checkpoint::with_params(meta, &self.store)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let (config, vocab) = read_meta::<DaConfig>(ck, "da")?;
        let mut m = DaClassifier::new(config, vocab, &mut crate::rng::seeded(0))?;
        ck.restore_params(&mut m.store)?;
        Ok(m)
    }
}

pub(crate) fn read_meta<C: serde::de::DeserializeOwned>(ck: &Checkpoint, kind: &str) -> Result<(C, Vocabulary)> {
    if ck.meta.get("kind").and_then(|k| k.as_str()) != Some(kind) {
        return Err(Error::Checkpoint(format!("not a {kind} checkpoint")));
    }
    let config = serde_json::from_value(ck.meta["config"].clone()).map_err(|e| Error::Checkpoint(format!("config: {e}")))?;
    let vocab = serde_json::from_value(ck.meta["vocab"].clone()).map_err(|e| Error::Checkpoint(format!("vocab: {e}")))?;
    Ok((config, vocab))
}

/// Per-label binary cross-entropy training; losses are reported per label.
pub fn da_train(
    model: &mut DaClassifier,
    data: &[DaInstance],
    schedule: &Schedule,
    opt: &mut Optimizer,
    rng: &mut Rng,
) -> Result<ClassifierReport> {
    let n_labels = model.num_labels();
    let prepared = data
        .iter()
        .map(|d| {
            if d.labels.iter().any(|&l| l >= n_labels) {
                return Err(Error::invalid("dialog-act label outside the inventory"));
            }
            Ok((model.input_ids(&d.context, &d.utterance)?, label_targets(&d.labels, n_labels)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut store = std::mem::take(&mut model.store);
    let m: &DaClassifier = model;
    let result = run_epochs(&mut store, prepared.len(), schedule, opt, rng, |tape, store, i, mode| {
        let (ids, t) = &prepared[i];
        let (z, _) = m.logits(tape, store, ids, mode)?;
        Ok((tape.bce_logits(z, t.clone())?, n_labels as f64))
    });
    model.store = store;
    Ok(ClassifierReport {
        epoch_losses: result?,
        examples: data.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::inventory::act_id;
    use crate::corpus::types::tokenize;
    use crate::corpus::vocab::build_vocab;
    use crate::nn::OptimizerConfig;
    use crate::rng::seeded;

    fn tiny() -> DaClassifier {
        let sents = [tokenize("yes i have a pet"), tokenize("okay")];
        let vocab = build_vocab(sents.iter().map(|s| s.as_slice()), 1, None).unwrap();
        let cfg = DaConfig {
            embedding: 8,
            hidden: 16,
            dropout: 0.0,
            ..DaConfig::default()
        };
        DaClassifier::new(cfg, vocab, &mut seeded(4)).unwrap()
    }

    #[test]
    fn decide_threshold_and_fallback() {
        assert_eq!(da_decide(&[0.9, 0.8, 0.1], 0.5), vec![0, 1]);
        assert_eq!(da_decide(&[0.2, 0.3], 0.5), vec![1]);
        assert_eq!(da_decide(&[0.9, 0.8], 1.01), vec![0]);
        assert_eq!(da_decide(&[0.4, 0.4], 0.5), vec![0]);
    }

    #[test]
    fn zero_weights_give_half() {
        let mut m = tiny();
        for p in m.store.iter_mut() {
            p.value.fill(0.0);
        }
        let pred = m.forward(&[], &tokenize("yes")).unwrap();
        assert!(pred.probs.iter().all(|&p| p == 0.5));
        assert_eq!(pred.probs.len(), DIALOG_ACTS.len());
        assert_eq!(m.decide(&pred), (0..DIALOG_ACTS.len()).collect::<Vec<_>>());
        assert_eq!(da_decide(&pred.probs, 0.6), vec![0]);
        assert!(m.forward(&[], &[]).is_err());
    }

    #[test]
    fn hidden_width_is_fixed_and_deterministic() {
        let m = tiny();
        let a = m.forward(&[], &tokenize("yes")).unwrap();
        let b = m.forward(&[], &tokenize("yes i have a pet")).unwrap();
        assert_eq!(a.hidden.len(), 16);
        assert_eq!(b.hidden.len(), 16);
        assert_eq!(b, m.forward(&[], &tokenize("yes i have a pet")).unwrap());
    }

    #[test]
    fn untrained_loss_near_ln2_per_label() {
        let mut m = tiny();
        let sched = Schedule {
            optimizer: OptimizerConfig::Sgd { lr: 0.0 },
            epochs: 1,
            batch_size: 1,
            clip_norm: 5.0,
        };
        for p in m.store.iter_mut() {
            p.value.fill(0.0);
        }
        let data = [DaInstance {
            context: vec![],
            utterance: tokenize("okay"),
            labels: vec![act_id("hold").unwrap()],
        }];
        let mut opt = Optimizer::new(sched.optimizer.clone());
        let r = da_train(&mut m, &data, &sched, &mut opt, &mut seeded(0)).unwrap();
        assert!((r.epoch_losses[0] - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn overfit_one() {
        let mut m = tiny();
        let mut labels = vec![act_id("positive_answer").unwrap(), act_id("statement").unwrap()];
        labels.sort();
        let data = [DaInstance {
            context: vec![],
            utterance: tokenize("yes i have a pet"),
            labels: labels.clone(),
        }];
        let sched = Schedule {
            optimizer: OptimizerConfig::adam(0.01),
            epochs: 300,
            batch_size: 1,
            clip_norm: 5.0,
        };
        let mut opt = Optimizer::new(sched.optimizer.clone());
        let r = da_train(&mut m, &data, &sched, &mut opt, &mut seeded(0)).unwrap();
        assert!(*r.epoch_losses.last().unwrap() < 0.05);
        let pred = m.forward(&[], &data[0].utterance).unwrap();
        assert_eq!(m.decide(&pred), labels);
    }

    #[test]
    fn checkpoint_round_trip() {
        let m = tiny();
        let bytes = m.to_checkpoint(serde_json::Value::Null).to_bytes();
        let back = DaClassifier::from_checkpoint(&Checkpoint::from_bytes(&bytes).unwrap()).unwrap();
        assert_eq!(back.to_checkpoint(serde_json::Value::Null).to_bytes(), bytes);
        let u = tokenize("yes i have a pet");
        assert_eq!(back.forward(&[], &u).unwrap(), m.forward(&[], &u).unwrap());
    }
}

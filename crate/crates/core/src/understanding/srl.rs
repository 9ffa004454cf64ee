//! BIO tagger over stacked alternating-direction highway LSTMs, plus the
//! two-pass parser (predicate identification, then argument tagging).

use serde::{Deserialize, Serialize};

use super::bio::{viterbi_bio, Span, TagSet, TransitionMask};
use super::da::{read_meta, ClassifierReport};
use super::frames::{extract_frames, predicate_spans, Predicate, SrlFrame};
use crate::corpus::vocab::{build_vocab, Vocabulary};
use crate::corpus::{PredicateSource, SrlExample};
use crate::error::{Error, Result};
use crate::nn::{dropout, run_epochs, Checkpoint, HighwayLstmCell, Init, Mode, Optimizer, ParamId, ParamStore, Schedule, Tape, Var};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SrlConfig {
    pub embedding: usize,
    /// Width of the predicate-indicator embedding.
    pub indicator: usize,
    pub hidden: usize,
    /// Stacked layers; even layers run left to right, odd layers right to left.
    pub layers: usize,
    pub dropout: f64,
}

impl Default for SrlConfig {
    fn default() -> Self {
        SrlConfig {
            embedding: 32,
            indicator: 8,
            hidden: 64,
            layers: 4,
            dropout: 0.1,
        }
    }
}

impl SrlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embedding == 0 || self.hidden == 0 || self.layers == 0 || self.indicator == 0 {
            return Err(Error::Config("SRL sizes must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config("dropout must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SrlTagger {
    pub config: SrlConfig,
    pub vocab: Vocabulary,
    pub tagset: TagSet,
    pub store: ParamStore,
    mask: TransitionMask,
    embed: ParamId,
    indicator: ParamId,
    layers: Vec<HighwayLstmCell>,
    out_w: ParamId,
    out_b: ParamId,
}

/// One tagging instance: tokens, the predicate to tag for (`None` when it
/// lives in context, or for predicate identification) and gold tags.
#[derive(Clone, Debug, PartialEq)]
pub struct SrlInstance {
    pub tokens: Vec<String>,
    pub predicate: Option<Span>,
    pub tags: Vec<String>,
}

impl SrlTagger {
    pub fn new(config: SrlConfig, vocab: Vocabulary, tagset: TagSet, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new();
        let embed = store.add_init("srl.embed", &[vocab.len(), config.embedding], Init::Uniform(0.1), rng)?;
        let indicator = store.add_init("srl.indicator", &[2, config.indicator], Init::Uniform(0.1), rng)?;
        let mut layers = Vec::with_capacity(config.layers);
        for l in 0..config.layers {
            let inp = if l == 0 {
                config.embedding + config.indicator
            } else {
                config.hidden
            };
            layers.push(HighwayLstmCell::new(&mut store, &format!("srl.l{l}"), inp, config.hidden, rng)?);
        }
        let out_w = store.add_init("srl.out.w", &[config.hidden, tagset.len()], Init::Xavier, rng)?;
        let out_b = store.add_init("srl.out.b", &[tagset.len()], Init::Zeros, rng)?;
        Ok(SrlTagger {
            mask: tagset.transition_mask(),
            config,
            vocab,
            tagset,
            store,
            embed,
            indicator,
            layers,
            out_w,
            out_b,
        })
    }

    fn check(&self, tokens: &[String], predicate: Option<Span>) -> Result<()> {
        if tokens.is_empty() {
            return Err(Error::invalid("cannot tag an empty utterance"));
        }
        if let Some(s) = predicate {
            if s.start > s.end || s.end >= tokens.len() {
                return Err(Error::invalid(format!(
                    "predicate span [{}, {}] outside an utterance of {} tokens",
                    s.start,
                    s.end,
                    tokens.len()
                )));
            }
        }
        Ok(())
    }

    /// Per-token tag logits on the tape.
    pub fn emissions(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        tokens: &[String],
        predicate: Option<Span>,
        mode: &mut Mode,
    ) -> Result<Vec<Var>> {
        self.check(tokens, predicate)?;
        let n = tokens.len();
        let mut xs = Vec::with_capacity(n);
        for (i, t) in tokens.iter().enumerate() {
            let w = tape.embed(store, self.embed, self.vocab.id(t))?;
            let flag = usize::from(predicate.is_some_and(|s| s.contains(i)));
            let f = tape.embed(store, self.indicator, flag)?;
            let x = tape.concat(&[w, f]);
            xs.push(dropout(tape, x, self.config.dropout, mode)?);
        }
        for (l, cell) in self.layers.iter().enumerate() {
            let z = tape.zeros(self.config.hidden);
            let (mut h, mut c) = (z, z);
            let mut out = vec![z; n];
            let order: Vec<usize> = if l % 2 == 0 { (0..n).collect() } else { (0..n).rev().collect() };
            for t in order {
                (h, c) = cell.step(tape, store, xs[t], h, c)?;
                out[t] = dropout(tape, h, self.config.dropout, mode)?;
            }
            xs = out;
        }
        xs.iter()
            .map(|&x| tape.affine(store, x, self.out_w, Some(self.out_b)))
            .collect()
    }

    /// Normalised tag distribution for every token (eval mode).
    pub fn forward(&self, tokens: &[String], predicate: Option<Span>) -> Result<Vec<Vec<f64>>> {
        let mut tape = Tape::new();
        let em = self.emissions(&mut tape, &self.store, tokens, predicate, &mut Mode::Eval)?;
        Ok(em.iter().map(|&e| crate::nn::softmax(tape.value(e))).collect())
    }

    /// Constrained decoding of [`SrlTagger::forward`].
    pub fn tag(&self, tokens: &[String], predicate: Option<Span>) -> Result<Vec<String>> {
        let d = self.forward(tokens, predicate)?;
        Ok(viterbi_bio(&d, &self.mask)
            .into_iter()
            .map(|i| self.tagset.name(i).to_string())
            .collect())
    }

    /// Constrained decoding of the mean distribution of several taggers
    /// sharing one tag set.
    pub fn tag_ensemble(taggers: &[&SrlTagger], tokens: &[String], predicate: Option<Span>) -> Result<Vec<String>> {
        let first = taggers.first().ok_or_else(|| Error::invalid("empty tagger ensemble"))?;
        if taggers.iter().any(|t| t.tagset != first.tagset) {
            return Err(Error::invalid("ensemble taggers use different tag sets"));
        }
        let mut mean = first.forward(tokens, predicate)?;
        for t in &taggers[1..] {
            for (row, add) in mean.iter_mut().zip(t.forward(tokens, predicate)?) {
                row.iter_mut().zip(add).for_each(|(a, b)| *a += b);
            }
        }
        let k = taggers.len() as f64;
        mean.iter_mut().flatten().for_each(|x| *x /= k);
        Ok(viterbi_bio(&mean, &first.mask)
            .into_iter()
            .map(|i| first.tagset.name(i).to_string())
            .collect())
    }

    pub fn to_checkpoint(&self, meta_extra: serde_json::Value) -> Checkpoint {
        let meta = serde_json::json!({
            "kind": "srl",
            "config": self.config,
            "vocab": self.vocab,
            "tagset": self.tagset,
            "extra": meta_extra,
        });
        Checkpoint::with_params(meta, &self.store)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let (config, vocab) = read_meta::<SrlConfig>(ck, "srl")?;
        let tagset: TagSet =
            serde_json::from_value(ck.meta["tagset"].clone()).map_err(|e| Error::Checkpoint(format!("tagset: {e}")))?;
        let mut m = SrlTagger::new(config, vocab, tagset, &mut crate::rng::seeded(0))?;
        ck.restore_params(&mut m.store)?;
        Ok(m)
    }
}

/// Token-level cross-entropy training; losses are reported per token.
pub fn srl_train(
    tagger: &mut SrlTagger,
    data: &[SrlInstance],
    schedule: &Schedule,
    opt: &mut Optimizer,
    rng: &mut Rng,
) -> Result<ClassifierReport> {
    let gold = data
        .iter()
        .map(|d| {
            if d.tags.len() != d.tokens.len() {
                return Err(Error::invalid("tag and token counts differ"));
            }
            tagger.check(&d.tokens, d.predicate)?;
            d.tags
                .iter()
                .map(|t| tagger.tagset.id(t).ok_or_else(|| Error::invalid(format!("tag `{t}` outside the tag set"))))
                .collect::<Result<Vec<usize>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut store = std::mem::take(&mut tagger.store);
    let m: &SrlTagger = tagger;
    let result = run_epochs(&mut store, data.len(), schedule, opt, rng, |tape, store, i, mode| {
        let em = m.emissions(tape, store, &data[i].tokens, data[i].predicate, mode)?;
        let losses = em
            .iter()
            .zip(&gold[i])
            .map(|(&e, &g)| tape.softmax_xent(e, g))
            .collect::<Result<Vec<_>>>()?;
        Ok((tape.sum_all(&losses)?, losses.len() as f64))
    });
    tagger.store = store;
    Ok(ClassifierReport {
        epoch_losses: result?,
        examples: data.len(),
    })
}

/// Vocabulary over the utterances (and references, when present) of an SRL corpus.
pub fn srl_vocab(examples: &[SrlExample], min_count: usize) -> Result<Vocabulary> {
    let sents = examples
        .iter()
        .flat_map(|e| std::iter::once(e.utterance.as_slice()).chain(e.reference.as_deref()));
    build_vocab(sents, min_count, None)
}

/// Argument-tagging and predicate-identification instances for one utterance
/// and its annotations.
pub fn instances_for(tokens: &[String], frames: &[crate::corpus::SrlAnnotation]) -> (Vec<SrlInstance>, SrlInstance) {
    let mut args = Vec::new();
    let mut pred_tags = vec!["O".to_string(); tokens.len()];
    for f in frames {
        let span = match (f.predicate_source, f.predicate_span) {
            (PredicateSource::InUtterance, Some(s)) => {
                for i in s.indices() {
                    pred_tags[i] = if i == s.start { "B-V" } else { "I-V" }.to_string();
                }
                Some(s)
            }
            _ => None,
        };
        args.push(SrlInstance {
            tokens: tokens.to_vec(),
            predicate: span,
            tags: f.tags.clone(),
        });
    }
    let pred = SrlInstance {
        tokens: tokens.to_vec(),
        predicate: None,
        tags: pred_tags,
    };
    (args, pred)
}

/// Which side of an SRL corpus to build instances from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SrlSide {
    /// Original utterances and their annotations.
    Original,
    /// Completed references and their annotations; examples without a
    /// reference contribute their original side.
    Completed,
}

pub fn srl_instances(examples: &[SrlExample], side: SrlSide) -> (Vec<SrlInstance>, Vec<SrlInstance>) {
    let (mut args, mut preds) = (Vec::new(), Vec::new());
    for e in examples {
        let (a, p) = match (side, &e.reference, &e.reference_frames) {
            (SrlSide::Completed, Some(r), Some(f)) => instances_for(r, f),
            _ => instances_for(&e.utterance, &e.frames),
        };
        args.extend(a);
        preds.push(p);
    }
    (args, preds)
}

/// Frames of one utterance with the decoded tag sequences behind them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SrlParse {
    pub frames: Vec<SrlFrame>,
    /// Output of the predicate-identification pass.
    pub predicate_tags: Vec<String>,
    /// Per-frame argument tag sequences, aligned with `frames`.
    pub tags: Vec<Vec<String>>,
}

impl SrlParse {
    pub fn has_predicate(&self) -> bool {
        !predicate_spans(&self.predicate_tags).is_empty()
    }
}

/// Predicate identifier plus argument tagger.
#[derive(Clone, Debug)]
pub struct SrlParser {
    pub predicates: SrlTagger,
    pub arguments: SrlTagger,
}

impl SrlParser {
    /// Tags arguments for every identified predicate. With no predicate in
    /// the utterance, a single context-predicate pass is run; it yields a
    /// frame only if it finds arguments.
    pub fn parse(&self, tokens: &[String]) -> Result<SrlParse> {
        Self::parse_ensemble(&[self], tokens)
    }

    /// [`SrlParser::parse`] with every decision taken on the mean
    /// distribution of the members.
    pub fn parse_ensemble(parsers: &[&SrlParser], tokens: &[String]) -> Result<SrlParse> {
        let preds: Vec<&SrlTagger> = parsers.iter().map(|p| &p.predicates).collect();
        let args: Vec<&SrlTagger> = parsers.iter().map(|p| &p.arguments).collect();
        let predicate_tags = SrlTagger::tag_ensemble(&preds, tokens, None)?;
        let spans = predicate_spans(&predicate_tags);
        let mut frames = Vec::new();
        let mut tags = Vec::new();
        if spans.is_empty() {
            let t = SrlTagger::tag_ensemble(&args, tokens, None)?;
            let f = extract_frames(&t, Predicate::Context);
            if !f.arguments.is_empty() {
                frames.push(f);
                tags.push(t);
            }
        } else {
            for s in spans {
                let t = SrlTagger::tag_ensemble(&args, tokens, Some(s))?;
                frames.push(extract_frames(&t, Predicate::InUtterance(s)));
                tags.push(t);
            }
        }
        Ok(SrlParse {
            frames,
            predicate_tags,
            tags,
        })
    }
}

use serde::{Deserialize, Serialize};

use super::beam::{beam_search, greedy, BeamHypothesis, StepModel};
use super::mixture::{mixture_on_tape, MixtureMode};
use crate::corpus::vocab::{encode_source, EncodedSource, Vocabulary, EOS, PAD, SEP, SOS, UNK};
use crate::corpus::DialogTurn;
use crate::error::{Error, Result};
use crate::nn::layers::LayerState;
use crate::nn::{dropout, AdditiveAttention, BiLstm, Checkpoint, Init, LstmCell, Mode, ParamId, ParamStore, Tape, Var};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompletionConfig {
    pub embedding: usize,
    pub hidden: usize,
    pub layers: usize,
    pub dropout: f64,
    /// Copy mechanism on or off (the no-copy model generates from the base vocabulary only).
    pub copy: bool,
    pub mixture: MixtureMode,
    pub history_depth: usize,
    pub max_len: usize,
}

impl Default for CompletionConfig {
    fn default() -> Self {
        CompletionConfig {
            embedding: 32,
            hidden: 64,
            layers: 2,
            dropout: 0.1,
            copy: true,
            mixture: MixtureMode::Additive,
            history_depth: 1,
            max_len: 30,
        }
    }
}

impl CompletionConfig {
    /// Large preset: 500-wide embeddings and states, dropout 0.3.
    pub fn full_scale() -> Self {
        CompletionConfig {
            embedding: 500,
            hidden: 500,
            dropout: 0.3,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.hidden % 2 != 0 {
            return Err(Error::Config("completion hidden size must be even and positive".into()));
        }
        if self.embedding == 0 || self.layers == 0 {
            return Err(Error::Config("completion embedding and layers must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config("dropout must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Pointer-generator completion model: bidirectional LSTM encoder, LSTM
/// decoder, additive attention, generation head and copy switch.
#[derive(Clone, Debug)]
pub struct CompletionModel {
    pub config: CompletionConfig,
    pub vocab: Vocabulary,
    pub store: ParamStore,
    embed: ParamId,
    encoder: BiLstm,
    decoder: Vec<LstmCell>,
    attention: AdditiveAttention,
    gen_w: ParamId,
    gen_b: ParamId,
    switch: Option<(ParamId, ParamId)>,
}

/// Encoder outputs kept on the tape for the whole decode.
pub struct Encoding {
    pub src: EncodedSource,
    keys: Vec<Var>,
    projected: Vec<Var>,
    init: DecoderState,
}

#[derive(Clone, Debug)]
pub struct DecoderState {
    pub layers: Vec<LayerState>,
}

/// Tape handles of one decoder step.
#[derive(Clone, Debug)]
pub struct StepVars {
    pub p: Var,
    pub p_gen: Var,
    pub attention: Var,
    pub lambda: Option<Var>,
    pub state: DecoderState,
}

/// Values of one decoder step.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoderStepOutput {
    pub lambda: f64,
    pub p_gen: Vec<f64>,
    pub attention: Vec<f64>,
    pub p: Vec<f64>,
}

/// A decoded completion with its confidence trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Completed {
    pub tokens: Vec<String>,
    pub ids: Vec<usize>,
    pub posteriors: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub score: f64,
}

impl CompletionModel {
    pub fn new(config: CompletionConfig, vocab: Vocabulary, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let (e, h, v) = (config.embedding, config.hidden, vocab.len());
        let mut store = ParamStore::new();
        let embed = store.add_init("embed", &[v, e], Init::Uniform(0.1), rng)?;
        let encoder = BiLstm::new(&mut store, "enc", e, h, config.layers, config.dropout, rng)?;
        let decoder = (0..config.layers)
            .map(|l| LstmCell::new(&mut store, &format!("dec.l{l}"), if l == 0 { e } else { h }, h, rng))
            .collect::<Result<Vec<_>>>()?;
        let attention = AdditiveAttention::new(&mut store, "attn", h, h, h, rng)?;
        let gen_w = store.add_init("gen.w", &[2 * h, v], Init::Xavier, rng)?;
        let gen_b = store.add_init("gen.b", &[v], Init::Zeros, rng)?;
        let switch = if config.copy {
            let w = store.add_init("switch.w", &[2 * h + e, 1], Init::Xavier, rng)?;
            let b = store.add_init("switch.b", &[1], Init::Zeros, rng)?;
            Some((w, b))
        } else {
            None
        };
        Ok(CompletionModel {
            config,
            vocab,
            store,
            embed,
            encoder,
            decoder,
            attention,
            gen_w,
            gen_b,
            switch,
        })
    }

    pub fn switch_params(&self) -> Option<(ParamId, ParamId)> {
        self.switch
    }

    pub fn encode_input(&self, context: &[DialogTurn], source: &[String]) -> EncodedSource {
        encode_source(&self.vocab, context, source, self.config.history_depth)
    }

    pub fn encode(&self, tape: &mut Tape, store: &ParamStore, src: EncodedSource, mode: &mut Mode) -> Result<Encoding> {
        let inputs = src
            .ids
            .iter()
            .map(|&id| tape.embed(store, self.embed, id))
            .collect::<Result<Vec<_>>>()?;
        let enc = self.encoder.encode(tape, store, &inputs, mode)?;
        let projected = self.attention.project_keys(tape, store, &enc.outputs)?;
        Ok(Encoding {
            src,
            keys: enc.outputs,
            projected,
            init: DecoderState { layers: enc.finals },
        })
    }

    pub fn initial_state(&self, enc: &Encoding) -> DecoderState {
        enc.init.clone()
    }

    /// One decoder step from `prev` (an extended id).
    pub fn decode_step(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        enc: &Encoding,
        prev: usize,
        state: &DecoderState,
        mode: &mut Mode,
    ) -> Result<StepVars> {
        let ext_len = if self.switch.is_some() {
            enc.src.ext.len()
        } else {
            self.vocab.len()
        };
        if prev >= enc.src.ext.len().max(self.vocab.len()) {
            return Err(Error::invalid(format!("unknown token id {prev}")));
        }
        let base = if prev < self.vocab.len() { prev } else { UNK };
        let x = tape.embed(store, self.embed, base)?;
        let mut input = x;
        let mut layers = Vec::with_capacity(self.decoder.len());
        for (l, cell) in self.decoder.iter().enumerate() {
            if l > 0 {
                input = dropout(tape, input, self.config.dropout, mode)?;
            }
            let st = state.layers[l];
            let (h, c) = cell.step(tape, store, input, st.h, st.c)?;
            layers.push(LayerState { h, c });
            input = h;
        }
        let s = dropout(tape, input, self.config.dropout, mode)?;
        let (ctx, attn, scores) = self.attention.attend(tape, store, s, &enc.keys, &enc.projected)?;
        let hs = tape.concat(&[ctx, s]);
        let gen = tape.affine(store, hs, self.gen_w, Some(self.gen_b))?;
        let (p, p_gen, lambda) = match self.switch {
            Some((w, b)) => {
                let feats = tape.concat(&[ctx, x, s]);
                let z = tape.affine(store, feats, w, Some(b))?;
                let lambda = tape.sigmoid(z);
                let p = mixture_on_tape(
                    tape,
                    lambda,
                    gen,
                    attn,
                    scores,
                    &enc.src.copy_ids,
                    ext_len,
                    self.config.mixture,
                )?;
                // Exposed P_gen is always the normalised generation distribution.
                let pg = tape.softmax(gen);
                (p, pg, Some(lambda))
            }
            None => {
                let p = tape.softmax(gen);
                (p, p, None)
            }
        };
        Ok(StepVars {
            p,
            p_gen,
            attention: attn,
            lambda,
            state: DecoderState { layers },
        })
    }

    pub fn step_output(tape: &Tape, v: &StepVars) -> DecoderStepOutput {
        DecoderStepOutput {
            lambda: v.lambda.map_or(1.0, |l| tape.scalar(l)),
            p_gen: tape.value(v.p_gen).to_vec(),
            attention: tape.value(v.attention).to_vec(),
            p: tape.value(v.p).to_vec(),
        }
    }

    /// Summed teacher-forced NLL of `target` (extended ids ending in EOS).
    pub fn sequence_loss(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        src: EncodedSource,
        target: &[usize],
        mode: &mut Mode,
    ) -> Result<Var> {
        let enc = self.encode(tape, store, src, mode)?;
        let mut state = self.initial_state(&enc);
        let mut prev = SOS;
        let mut losses = Vec::with_capacity(target.len());
        let ext_len = if self.switch.is_some() {
            enc.src.ext.len()
        } else {
            self.vocab.len()
        };
        for &y in target {
            let sv = self.decode_step(tape, store, &enc, prev, &state, mode)?;
            let y_eff = if y >= ext_len { UNK } else { y };
            losses.push(tape.neg_log(sv.p, y_eff)?);
            state = sv.state;
            prev = y;
        }
        tape.sum_all(&losses)
    }

    fn runner(&self, context: &[DialogTurn], source: &[String]) -> Result<Runner<'_>> {
        let mut tape = Tape::new();
        let enc = self.encode(&mut tape, &self.store, self.encode_input(context, source), &mut Mode::Eval)?;
        Ok(Runner {
            model: self,
            tape,
            enc,
            lambdas: Vec::new(),
        })
    }

    fn finish(&self, src: &EncodedSource, h: &BeamHypothesis, lambdas: Vec<f64>) -> Completed {
        Completed {
            tokens: h.tokens.iter().map(|&i| src.ext.token(&self.vocab, i).to_string()).collect(),
            ids: h.tokens.clone(),
            posteriors: h.posteriors.clone(),
            lambdas,
            score: h.score,
        }
    }

    /// Greedy completion; `lambdas` traces the copy switch per emitted token.
    pub fn greedy_decode(&self, context: &[DialogTurn], source: &[String], max_len: usize) -> Result<Completed> {
        let mut r = self.runner(context, source)?;
        let h = greedy(&mut r, max_len)?;
        let lambdas = r.lambdas[..h.tokens.len()].to_vec();
        Ok(self.finish(&r.enc.src, &h, lambdas))
    }

    /// Ranked beam hypotheses as completions (lambda traces omitted).
    pub fn beam_decode(
        &self,
        context: &[DialogTurn],
        source: &[String],
        k: usize,
        max_len: usize,
    ) -> Result<Vec<Completed>> {
        let mut r = self.runner(context, source)?;
        let hyps = beam_search(&mut r, k, max_len)?;
        Ok(hyps.iter().map(|h| self.finish(&r.enc.src, h, vec![])).collect())
    }

    pub fn to_checkpoint(&self, meta_extra: serde_json::Value) -> Checkpoint {
        let meta = serde_json::json!({
            "kind": "completion",
            "config": self.config,
            "vocab": self.vocab,
            "extra": meta_extra,
        });
        Checkpoint::with_params(meta, &self.store)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.meta.get("kind").and_then(|k| k.as_str()) != Some("completion") {
            return Err(Error::Checkpoint("not a completion checkpoint".into()));
        }
        let config: CompletionConfig = serde_json::from_value(ck.meta["config"].clone())
            .map_err(|e| Error::Checkpoint(format!("config: {e}")))?;
        let vocab: Vocabulary =
            serde_json::from_value(ck.meta["vocab"].clone()).map_err(|e| Error::Checkpoint(format!("vocab: {e}")))?;
        let mut m = CompletionModel::new(config, vocab, &mut crate::rng::seeded(0))?;
        ck.restore_params(&mut m.store)?;
        Ok(m)
    }
}

/// Eval-mode decoder driving the generic search routines.
struct Runner<'a> {
    model: &'a CompletionModel,
    tape: Tape,
    enc: Encoding,
    lambdas: Vec<f64>,
}

impl StepModel for Runner<'_> {
    type State = DecoderState;

    fn initial(&mut self) -> Result<DecoderState> {
        Ok(self.model.initial_state(&self.enc))
    }

    fn step(&mut self, state: &DecoderState, prev: usize) -> Result<(Vec<f64>, DecoderState)> {
        let m = self.model;
        let sv = m.decode_step(&mut self.tape, &m.store, &self.enc, prev, state, &mut Mode::Eval)?;
        self.lambdas.push(sv.lambda.map_or(1.0, |l| self.tape.scalar(l)));
        Ok((self.tape.value(sv.p).to_vec(), sv.state))
    }

    fn start_token(&self) -> usize {
        SOS
    }

    fn end_token(&self) -> usize {
        EOS
    }

    fn banned(&self, id: usize) -> bool {
        id == PAD || id == SOS || id == SEP
    }
}

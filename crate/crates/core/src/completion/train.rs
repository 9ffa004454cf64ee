use log::warn;
use serde::{Deserialize, Serialize};

use super::model::CompletionModel;
use crate::corpus::vocab::{build_vocab, encode_target, EncodedSource, Vocabulary};
use crate::corpus::CompletionExample;
use crate::error::Result;
use crate::nn::{run_epochs, Optimizer, Schedule};
use crate::rng::Rng;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean NLL per target token, one entry per epoch.
    pub epoch_losses: Vec<f64>,
    /// Reference tokens outside base vocabulary ∪ source, trained as UNK.
    pub unk_targets: usize,
    pub examples: usize,
}

/// Vocabulary over contexts, sources and references. Counts are per example
/// (a token seen several times in one dialog counts once), so one-off names
/// stay out of the vocabulary and are learned as copies.
pub fn completion_vocab(examples: &[CompletionExample], min_count: usize, max_size: Option<usize>) -> Result<Vocabulary> {
    let docs: Vec<Vec<String>> = examples
        .iter()
        .map(|e| {
            let set: std::collections::BTreeSet<&String> = e
                .context
                .iter()
                .flat_map(|t| &t.tokens)
                .chain(&e.source)
                .chain(&e.reference)
                .collect();
            set.into_iter().cloned().collect()
        })
        .collect();
    build_vocab(docs.iter().map(|d| d.as_slice()), min_count, max_size)
}

pub fn prepare(model: &CompletionModel, examples: &[CompletionExample]) -> (Vec<(EncodedSource, Vec<usize>)>, usize) {
    let mut unk = 0;
    let data = examples
        .iter()
        .map(|e| {
            let src = model.encode_input(&e.context, &e.source);
            let (tgt, u) = encode_target(&model.vocab, &src.ext, &e.reference);
            unk += u;
            (src, tgt)
        })
        .collect();
    (data, unk)
}

/// Teacher-forced training on `examples`.
pub fn train(
    model: &mut CompletionModel,
    examples: &[CompletionExample],
    schedule: &Schedule,
    opt: &mut Optimizer,
    rng: &mut Rng,
) -> Result<TrainReport> {
    let (data, unk_targets) = prepare(model, examples);
    if unk_targets > 0 {
        warn!("{unk_targets} reference tokens are neither in the vocabulary nor copyable; trained as <unk>");
    }
    let mut store = std::mem::take(&mut model.store);
    let m: &CompletionModel = model;
    let result = run_epochs(&mut store, data.len(), schedule, opt, rng, |tape, store, i, mode| {
        let (src, tgt) = &data[i];
        let loss = m.sequence_loss(tape, store, src.clone(), tgt, mode)?;
        Ok((loss, tgt.len() as f64))
    });
    model.store = store;
    Ok(TrainReport {
        epoch_losses: result?,
        unk_targets,
        examples: examples.len(),
    })
}

/// Mean per-token NLL in eval mode.
pub fn evaluate_nll(model: &CompletionModel, examples: &[CompletionExample]) -> Result<f64> {
    let (data, _) = prepare(model, examples);
    let (mut total, mut n) = (0.0, 0usize);
    for (src, tgt) in data {
        let mut tape = crate::nn::Tape::new();
        let l = model.sequence_loss(&mut tape, &model.store, src, &tgt, &mut crate::nn::Mode::Eval)?;
        total += tape.scalar(l);
        n += tgt.len();
    }
    Ok(if n == 0 { 0.0 } else { total / n as f64 })
}

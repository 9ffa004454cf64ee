//! Shared mini-batch training loop.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::layers::Mode;
use super::optim::{Optimizer, OptimizerConfig};
use super::param::ParamStore;
use super::tape::{Tape, Var};
use crate::error::Result;
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Schedule {
    pub optimizer: OptimizerConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub clip_norm: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            optimizer: OptimizerConfig::Sgd { lr: 1.0 },
            epochs: 10,
            batch_size: 16,
            clip_norm: 5.0,
        }
    }
}

/// Runs `schedule.epochs` shuffled passes over `n` examples. `loss` returns
/// the summed loss of one example and the number of units it sums over;
/// gradients of each batch are averaged over those units before clipping and
/// the optimizer step. Returns the mean loss per unit of every epoch.
pub fn run_epochs<F>(
    store: &mut ParamStore,
    n: usize,
    schedule: &Schedule,
    opt: &mut Optimizer,
    rng: &mut Rng,
    mut loss: F,
) -> Result<Vec<f64>>
where
    F: FnMut(&mut Tape, &ParamStore, usize, &mut Mode) -> Result<(Var, f64)>,
{
    let mut order: Vec<usize> = (0..n).collect();
    let mut epochs = Vec::with_capacity(schedule.epochs);
    for epoch in 0..schedule.epochs {
        order.shuffle(rng);
        let (mut total, mut units) = (0.0, 0.0);
        for batch in order.chunks(schedule.batch_size.max(1)) {
            store.zero_grads();
            let mut batch_units = 0.0;
            for &i in batch {
                let mut tape = Tape::new();
                let (l, u) = {
                    let mut mode = Mode::Train(rng);
                    loss(&mut tape, store, i, &mut mode)?
                };
                total += tape.scalar(l);
                batch_units += u;
                tape.backward(l, store)?;
            }
            units += batch_units;
            if batch_units > 0.0 {
                store.scale_grads(1.0 / batch_units);
            }
            store.clip_grad_norm(schedule.clip_norm);
            opt.step(store);
        }
        epochs.push(if units > 0.0 { total / units } else { 0.0 });
        log::info!("epoch {}/{}: loss {:.4}", epoch + 1, schedule.epochs, epochs[epoch]);
    }
    Ok(epochs)
}

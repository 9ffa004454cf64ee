//! Held-out data for the understanding tasks and training of the models a
//! set of variants needs.

use std::collections::BTreeMap;

use super::config::RunConfig;
use super::data::{pick, Holdout};
use super::grid::{DaModels, SrlModels, Variant};
use super::models::{complete_all, init_stream, train_da, train_joint, train_srl, InputPath};
use crate::completion::{Completed, CompletionModel};
use crate::corpus::{DaExample, DialogTurn, SrlExample};
use crate::error::{Error, Result};
use crate::selection::{HiddenMode, PairedInstance, SelectionMethod};
use crate::understanding::{DaInstance, SrlSide};

/// Dialog-act train/test material. CMP-path training inputs are the
/// completion model's own outputs on the training utterances. Without a
/// completion model every utterance stands for its own completion and
/// CMP-path instances are unavailable.
#[derive(Clone, Debug)]
pub struct DaData {
    pub split: Holdout,
    pub train: Vec<DaExample>,
    pub train_completions: Vec<Completed>,
    pub test: Vec<DaExample>,
    pub test_completions: Vec<Completed>,
    pub completed: bool,
}

/// The utterance as its own completion, with unit posteriors.
pub fn identity_completion(tokens: &[String]) -> Completed {
    Completed {
        tokens: tokens.to_vec(),
        ids: vec![],
        posteriors: vec![1.0; tokens.len()],
        lambdas: vec![],
        score: 0.0,
    }
}

fn complete_or_copy<'a, I>(model: Option<&CompletionModel>, inputs: I, beam: usize) -> Result<Vec<Completed>>
where
    I: Iterator<Item = (&'a [DialogTurn], &'a [String])>,
{
    let inputs: Vec<_> = inputs.collect();
    match model {
        Some(m) => complete_all(m, &inputs, beam),
        None => Ok(inputs.iter().map(|(_, u)| identity_completion(u)).collect()),
    }
}

fn da_input(e: &DaExample) -> (&[DialogTurn], &[String]) {
    (&e.context, &e.utterance)
}

impl DaData {
    pub fn new(cfg: &RunConfig, da: &[DaExample], completion: Option<&CompletionModel>) -> Result<Self> {
        let split = Holdout::new(da.len(), cfg.data.test_fraction, cfg.seed)?;
        let train = pick(da, &split.train);
        let test = pick(da, &split.test);
        let beam = cfg.completion.beam;
        let train_completions = complete_or_copy(completion, train.iter().map(da_input), beam)?;
        let test_completions = complete_or_copy(completion, test.iter().map(da_input), beam)?;
        Ok(DaData {
            train_completions,
            test_completions,
            completed: completion.is_some(),
            split,
            train,
            test,
        })
    }

    pub fn instances(&self, path: InputPath) -> Result<Vec<DaInstance>> {
        if path == InputPath::Cmp && !self.completed {
            return Err(Error::Config("CMP-path instances need a completion model".into()));
        }
        Ok(self
            .train
            .iter()
            .zip(&self.train_completions)
            .map(|(e, c)| DaInstance {
                context: e.context.clone(),
                utterance: match path {
                    InputPath::El => e.utterance.clone(),
                    InputPath::Cmp => c.tokens.clone(),
                },
                labels: e.labels.clone(),
            })
            .collect())
    }

    pub fn paired(&self, pair: (InputPath, InputPath)) -> Result<Vec<PairedInstance>> {
        let a = self.instances(pair.0)?;
        let b = self.instances(pair.1)?;
        Ok(a.into_iter()
            .zip(b)
            .map(|(x, y)| PairedInstance {
                context: x.context,
                original: x.utterance,
                completed: y.utterance,
                labels: x.labels,
            })
            .collect())
    }
}

/// SRL train/test material; the CMP parser trains on reference completions.
#[derive(Clone, Debug)]
pub struct SrlData {
    pub split: Holdout,
    pub train: Vec<SrlExample>,
    pub test: Vec<SrlExample>,
    pub test_completions: Vec<Completed>,
}

impl SrlData {
    pub fn new(cfg: &RunConfig, srl: &[SrlExample], completion: Option<&CompletionModel>) -> Result<Self> {
        let split = Holdout::new(srl.len(), cfg.data.test_fraction, cfg.seed)?;
        let train = pick(srl, &split.train);
        let test = pick(srl, &split.test);
        let inputs = test.iter().map(|e| (e.context.as_slice(), e.utterance.as_slice()));
        Ok(SrlData {
            test_completions: complete_or_copy(completion, inputs, cfg.completion.beam)?,
            split,
            train,
            test,
        })
    }
}

/// Classifier counts per path and joint models the given variants and
/// methods need.
pub fn da_requirements(variants: &[Variant], methods: &[SelectionMethod]) -> (usize, usize, Vec<((InputPath, InputPath), HiddenMode)>) {
    let (mut ne, mut nc) = (0, 0);
    let mut joint = Vec::new();
    for v in variants {
        let (e, c) = v.members();
        ne = ne.max(e);
        nc = nc.max(c);
        if let Some(pair) = v.pair() {
            for m in methods.iter().filter_map(|m| m.hidden_mode()) {
                if !joint.contains(&(pair, m)) {
                    joint.push((pair, m));
                }
            }
        }
    }
    (ne, nc, joint)
}

/// Seeds of every trained model, by stream name.
pub type Seeds = BTreeMap<String, u64>;

pub fn train_da_models(
    cfg: &RunConfig,
    data: &DaData,
    variants: &[Variant],
    methods: &[SelectionMethod],
) -> Result<(DaModels, Seeds)> {
    let (ne, nc, joint) = da_requirements(variants, methods);
    let mut models = DaModels::default();
    let mut seeds = Seeds::new();
    for (path, n) in [(InputPath::El, ne), (InputPath::Cmp, nc)] {
        if n == 0 {
            continue;
        }
        let inst = data.instances(path)?;
        for k in 0..n {
            let name = init_stream("da", path, k);
            let t = train_da(cfg, &inst, &name)?;
            log::info!("{name}: final loss {:?}", t.report.epoch_losses.last());
            seeds.insert(name, t.seed);
            match path {
                InputPath::El => models.el.push(t.model),
                InputPath::Cmp => models.cmp.push(t.model),
            }
        }
    }
    for (pair, mode) in joint {
        let name = format!("init-joint-{}-{}-{mode:?}", pair.0.tag(), pair.1.tag()).to_lowercase();
        let t = train_joint(cfg, &data.paired(pair)?, mode, &name)?;
        seeds.insert(name, t.seed);
        models.joint.push((pair, mode, t.model));
    }
    Ok((models, seeds))
}

pub fn train_srl_models(cfg: &RunConfig, data: &SrlData, variants: &[Variant]) -> Result<(SrlModels, Seeds)> {
    let (mut ne, mut nc) = (0, 0);
    for v in variants {
        let (e, c) = v.members();
        ne = ne.max(e);
        nc = nc.max(c);
    }
    let mut models = SrlModels::default();
    let mut seeds = Seeds::new();
    for (path, n, side) in [(InputPath::El, ne, SrlSide::Original), (InputPath::Cmp, nc, SrlSide::Completed)] {
        for k in 0..n {
            let name = init_stream("srl", path, k);
            let t = train_srl(cfg, &data.train, side, &name)?;
            seeds.insert(name, t.seed);
            match path {
                InputPath::El => models.el.push(t.model),
                InputPath::Cmp => models.cmp.push(t.model),
            }
        }
    }
    Ok((models, seeds))
}

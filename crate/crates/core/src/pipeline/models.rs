//! Training entry points with seed derivation, and checkpoint files of a
//! model directory.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::completion::{completion_vocab, Completed, CompletionModel, TrainReport};
use crate::corpus::{build_vocab, CompletionExample, DialogTurn, SrlExample};
use crate::error::{Error, Result};
use crate::exec::try_par_map;
use crate::nn::{Checkpoint, Optimizer, ParamStore, Schedule};
use crate::rng::{derive_seed, stream};
use crate::selection::{joint_train, HiddenMode, JointDaModel, PairedInstance};
use crate::understanding::bio::TagSet;
use crate::understanding::srl::srl_train;
use crate::understanding::{da_train, srl_instances, srl_vocab, ClassifierReport, DaClassifier, DaInstance, SrlParser, SrlSide, SrlTagger};

/// Which utterances a model reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputPath {
    /// Original utterances, ellipsis included.
    El,
    /// Completed utterances.
    Cmp,
}

impl InputPath {
    pub fn name(self) -> &'static str {
        match self {
            InputPath::El => "el",
            InputPath::Cmp => "cmp",
        }
    }

    /// Upper-case tag used in seed stream names.
    pub fn tag(self) -> &'static str {
        match self {
            InputPath::El => "EL",
            InputPath::Cmp => "CMP",
        }
    }
}

impl std::str::FromStr for InputPath {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "el" => Ok(InputPath::El),
            "cmp" => Ok(InputPath::Cmp),
            _ => Err(Error::Config(format!("unknown input path `{s}` (el or cmp)"))),
        }
    }
}

pub const COMPLETION_CKPT: &str = "completion.ckpt";

pub fn da_ckpt(path: InputPath, member: usize) -> String {
    format!("da-{}-{member}.ckpt", path.name())
}

/// Joint hidden-state model over a pair of paths.
pub fn joint_ckpt(pair: (InputPath, InputPath), mode: HiddenMode) -> String {
    let m = match mode {
        HiddenMode::Sum => "sum",
        HiddenMode::Max => "max",
        HiddenMode::Cat => "cat",
    };
    format!("joint-{}-{}-{m}.ckpt", pair.0.name(), pair.1.name())
}

pub fn srl_ckpt(path: InputPath, member: usize) -> String {
    format!("srl-{}-{member}.ckpt", path.name())
}

/// Stream name of a model's initialisation. Ensemble members differ only here.
pub fn init_stream(model: &str, path: InputPath, member: usize) -> String {
    if member == 0 {
        format!("init-{model}-{}", path.tag())
    } else {
        format!("init-{model}-{}-{member}", path.tag())
    }
}

pub fn shuffle_stream(init: &str) -> String {
    format!("shuffle-{}", init.trim_start_matches("init-"))
}

/// Loads a checkpoint, naming the file when it is missing.
pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    if !path.is_file() {
        return Err(Error::Config(format!("checkpoint {} not found", path.display())));
    }
    Checkpoint::load(path)
}

/// Appends the optimizer state to a model checkpoint.
pub fn with_optimizer(mut ck: Checkpoint, opt: &Optimizer, store: &ParamStore) -> Checkpoint {
    for (n, t) in opt.state_tensors(store) {
        ck.push(n, t);
    }
    ck
}

/// A fresh optimizer for `schedule` carrying the saved state, if any.
pub fn restore_optimizer(ck: &Checkpoint, schedule: &Schedule, store: &ParamStore) -> Result<Optimizer> {
    let mut opt = Optimizer::new(schedule.optimizer.clone());
    let tensors: Vec<_> = ck.tensors.iter().filter(|(n, _)| n.starts_with("optim/")).cloned().collect();
    opt.restore(store, &tensors)?;
    Ok(opt)
}

/// Seed provenance stored in checkpoint metadata.
pub fn seed_meta(stream: &str, seed: u64) -> serde_json::Value {
    serde_json::json!({ "stream": stream, "seed": seed })
}

/// The shuffle stream of a (possibly resumed) run: keyed by the optimizer's
/// step count so a resumed run does not replay the first epochs' order.
fn shuffle_rng(seed: u64, init: &str, opt: &Optimizer) -> crate::rng::Rng {
    stream(seed, &format!("{}@{}", shuffle_stream(init), opt.steps))
}

/// A trained model with the optimizer that trained it.
#[derive(Clone, Debug)]
pub struct Trained<M, R> {
    pub model: M,
    pub optimizer: Optimizer,
    pub report: R,
    pub seed: u64,
}

// ---- completion

pub fn new_completion(cfg: &RunConfig, train: &[CompletionExample]) -> Result<CompletionModel> {
    let vocab = completion_vocab(train, cfg.completion.min_count, None)?;
    CompletionModel::new(cfg.completion.model.clone(), vocab, &mut stream(cfg.seed, COMPLETION_STREAM))
}

pub const COMPLETION_STREAM: &str = "init-completion";

/// Trains `model` for `schedule.epochs` more epochs.
pub fn fit_completion(
    model: &mut CompletionModel,
    opt: &mut Optimizer,
    cfg: &RunConfig,
    train: &[CompletionExample],
) -> Result<TrainReport> {
    let mut rng = shuffle_rng(cfg.seed, COMPLETION_STREAM, opt);
    crate::completion::train(model, train, &cfg.completion.schedule, opt, &mut rng)
}

pub fn train_completion(cfg: &RunConfig, train: &[CompletionExample]) -> Result<Trained<CompletionModel, TrainReport>> {
    let mut model = new_completion(cfg, train)?;
    let mut opt = Optimizer::new(cfg.completion.schedule.optimizer.clone());
    let report = fit_completion(&mut model, &mut opt, cfg, train)?;
    Ok(Trained {
        model,
        optimizer: opt,
        report,
        seed: derive_seed(cfg.seed, COMPLETION_STREAM),
    })
}

pub fn completion_checkpoint(t: &Trained<CompletionModel, TrainReport>) -> Checkpoint {
    let ck = t.model.to_checkpoint(seed_meta(COMPLETION_STREAM, t.seed));
    with_optimizer(ck, &t.optimizer, &t.model.store)
}

/// Model and optimizer state; the optimizer takes `schedule`'s settings.
pub fn resume_completion(ck: &Checkpoint, schedule: &Schedule) -> Result<(CompletionModel, Optimizer)> {
    let m = CompletionModel::from_checkpoint(ck)?;
    let opt = restore_optimizer(ck, schedule, &m.store)?;
    Ok((m, opt))
}

/// Completes every `(context, utterance)` pair with the top beam
/// hypothesis (greedy for width 1). An empty completion falls back to the
/// original utterance with unit posteriors.
pub fn complete_all(model: &CompletionModel, inputs: &[(&[DialogTurn], &[String])], beam: usize) -> Result<Vec<Completed>> {
    let max_len = model.config.max_len;
    try_par_map(inputs, |&(ctx, src)| {
        let c = if beam <= 1 {
            model.greedy_decode(ctx, src, max_len)?
        } else {
            model
                .beam_decode(ctx, src, beam, max_len)?
                .into_iter()
                .next()
                .ok_or_else(|| Error::invalid("beam search returned no hypothesis"))?
        };
        if c.tokens.is_empty() {
            return Ok(Completed {
                score: c.score,
                ..super::experiment::identity_completion(src)
            });
        }
        Ok(c)
    })
}

// ---- dialog acts

pub fn new_da(cfg: &RunConfig, data: &[DaInstance], init: &str) -> Result<DaClassifier> {
    let vocab = build_vocab(data.iter().map(|d| d.utterance.as_slice()), cfg.da.min_count, None)?;
    DaClassifier::new(cfg.da.model.clone(), vocab, &mut stream(cfg.seed, init))
}

pub fn fit_da(
    model: &mut DaClassifier,
    opt: &mut Optimizer,
    cfg: &RunConfig,
    data: &[DaInstance],
    init: &str,
) -> Result<ClassifierReport> {
    let mut rng = shuffle_rng(cfg.seed, init, opt);
    da_train(model, data, &cfg.da.schedule, opt, &mut rng)
}

pub fn train_da(cfg: &RunConfig, data: &[DaInstance], init: &str) -> Result<Trained<DaClassifier, ClassifierReport>> {
    let mut model = new_da(cfg, data, init)?;
    let mut opt = Optimizer::new(cfg.da.schedule.optimizer.clone());
    let report = fit_da(&mut model, &mut opt, cfg, data, init)?;
    Ok(Trained {
        model,
        optimizer: opt,
        report,
        seed: derive_seed(cfg.seed, init),
    })
}

pub fn train_joint(
    cfg: &RunConfig,
    data: &[PairedInstance],
    mode: HiddenMode,
    init: &str,
) -> Result<Trained<JointDaModel, ClassifierReport>> {
    let sents = data.iter().flat_map(|d| [d.original.as_slice(), d.completed.as_slice()]);
    let vocab = build_vocab(sents, cfg.da.min_count, None)?;
    let mut model = JointDaModel::new(cfg.da.model.clone(), mode, vocab, &mut stream(cfg.seed, init))?;
    let mut opt = Optimizer::new(cfg.da.schedule.optimizer.clone());
    let mut rng = shuffle_rng(cfg.seed, init, &opt);
    let report = joint_train(&mut model, data, &cfg.da.schedule, &mut opt, &mut rng)?;
    Ok(Trained {
        model,
        optimizer: opt,
        report,
        seed: derive_seed(cfg.seed, init),
    })
}

// ---- semantic roles

/// Reports of the two taggers behind a parser.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParserReport {
    pub predicates: ClassifierReport,
    pub arguments: ClassifierReport,
}

/// Trains the predicate identifier and the argument tagger on one side of
/// an SRL corpus. Both share the vocabulary built over utterances and
/// references.
pub fn train_srl(
    cfg: &RunConfig,
    examples: &[SrlExample],
    side: SrlSide,
    init: &str,
) -> Result<Trained<SrlParser, ParserReport>> {
    let vocab = srl_vocab(examples, cfg.srl.min_count)?;
    let (args, preds) = srl_instances(examples, side);
    let mut rng = stream(cfg.seed, init);
    let mut predicates = SrlTagger::new(cfg.srl.model.clone(), vocab.clone(), TagSet::predicate(), &mut rng)?;
    let mut arguments = SrlTagger::new(cfg.srl.model.clone(), vocab, TagSet::roles(), &mut rng)?;
    let schedule = &cfg.srl.schedule;
    let mut opt_p = Optimizer::new(schedule.optimizer.clone());
    let mut shuffle = shuffle_rng(cfg.seed, init, &opt_p);
    let rp = srl_train(&mut predicates, &preds, schedule, &mut opt_p, &mut shuffle)?;
    let mut opt_a = Optimizer::new(schedule.optimizer.clone());
    let ra = srl_train(&mut arguments, &args, schedule, &mut opt_a, &mut shuffle)?;
    Ok(Trained {
        model: SrlParser { predicates, arguments },
        optimizer: opt_a,
        report: ParserReport {
            predicates: rp,
            arguments: ra,
        },
        seed: derive_seed(cfg.seed, init),
    })
}

/// Both taggers in one file; tensor names are prefixed `pred/` and `arg/`.
pub fn parser_checkpoint(p: &SrlParser, extra: serde_json::Value) -> Checkpoint {
    let cp = p.predicates.to_checkpoint(serde_json::Value::Null);
    let ca = p.arguments.to_checkpoint(serde_json::Value::Null);
    let mut ck = Checkpoint::new(serde_json::json!({
        "kind": "srl_parser",
        "extra": extra,
        "predicates": cp.meta,
        "arguments": ca.meta,
    }));
    for (n, t) in cp.tensors {
        ck.push(format!("pred/{n}"), t);
    }
    for (n, t) in ca.tensors {
        ck.push(format!("arg/{n}"), t);
    }
    ck
}

pub fn parser_from_checkpoint(ck: &Checkpoint) -> Result<SrlParser> {
    if ck.meta.get("kind").and_then(|k| k.as_str()) != Some("srl_parser") {
        return Err(Error::Checkpoint("not an SRL parser checkpoint".into()));
    }
    let part = |key: &str, prefix: &str| {
        let mut c = Checkpoint::new(ck.meta[key].clone());
        for (n, t) in &ck.tensors {
            if let Some(rest) = n.strip_prefix(prefix) {
                c.push(rest, t.clone());
            }
        }
        SrlTagger::from_checkpoint(&c)
    };
    Ok(SrlParser {
        predicates: part("predicates", "pred/")?,
        arguments: part("arguments", "arg/")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, SynthConfig};
    use crate::nn::OptimizerConfig;

    fn small_cfg() -> RunConfig {
        let mut c = RunConfig::default();
        c.completion.model.embedding = 8;
        c.completion.model.hidden = 8;
        c.completion.schedule.epochs = 1;
        c.srl.model = crate::understanding::SrlConfig {
            embedding: 6,
            indicator: 2,
            hidden: 6,
            layers: 2,
            dropout: 0.0,
        };
        c.srl.schedule.epochs = 1;
        c
    }

    #[test]
    fn names() {
        assert_eq!(da_ckpt(InputPath::Cmp, 1), "da-cmp-1.ckpt");
        assert_eq!(joint_ckpt((InputPath::El, InputPath::Cmp), HiddenMode::Cat), "joint-el-cmp-cat.ckpt");
        assert_eq!(init_stream("da", InputPath::El, 0), "init-da-EL");
        assert_eq!(shuffle_stream(&init_stream("da", InputPath::El, 2)), "shuffle-da-EL-2");
        assert!(load_checkpoint(Path::new("/nonexistent/x.ckpt")).unwrap_err().to_string().contains("x.ckpt"));
    }

    #[test]
    fn parser_checkpoint_round_trip() {
        let c = generate_synthetic(2, 30, &SynthConfig::default()).unwrap();
        let t = train_srl(&small_cfg(), &c.srl, SrlSide::Original, "init-srl-EL").unwrap();
        let ck = parser_checkpoint(&t.model, seed_meta("init-srl-EL", t.seed));
        let back = parser_from_checkpoint(&Checkpoint::from_bytes(&ck.to_bytes()).unwrap()).unwrap();
        let toks = &c.srl[0].utterance;
        assert_eq!(back.parse(toks).unwrap(), t.model.parse(toks).unwrap());
        assert!(parser_from_checkpoint(&t.model.arguments.to_checkpoint(serde_json::Value::Null)).is_err());
    }

    #[test]
    fn resume_restores_optimizer_moments() {
        let mut cfg = small_cfg();
        cfg.completion.schedule.optimizer = OptimizerConfig::adam(0.01);
        let c = generate_synthetic(2, 20, &SynthConfig::default()).unwrap();
        let t = train_completion(&cfg, &c.completion).unwrap();
        let ck = completion_checkpoint(&t);
        let (m, opt) = resume_completion(&Checkpoint::from_bytes(&ck.to_bytes()).unwrap(), &cfg.completion.schedule).unwrap();
        assert_eq!(opt, t.optimizer);
        assert_eq!(m.store.iter().map(|p| p.value.clone()).collect::<Vec<_>>(), t.model.store.iter().map(|p| p.value.clone()).collect::<Vec<_>>());
    }
}

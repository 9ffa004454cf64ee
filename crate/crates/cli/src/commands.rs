use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use elhyb::completion::CompletionModel;
use elhyb::corpus::{generate_synthetic, CompletionExample, DaExample, DialogTurn, FieldMapping, SrlExample};
use elhyb::eval::{Averaging, MetricReport, SrlScoring};
use elhyb::nn::{Checkpoint, Optimizer};
use elhyb::pipeline::data::{load_one, pick, COMPLETION_FILE, DA_FILE, SRL_FILE};
use elhyb::pipeline::experiment::{da_requirements, DaData, SrlData};
use elhyb::pipeline::grid::da_method_table;
use elhyb::pipeline::models::{
    complete_all, da_ckpt, fit_completion, fit_da, init_stream, joint_ckpt, load_checkpoint, new_completion, new_da,
    parser_checkpoint, parser_from_checkpoint, restore_optimizer, resume_completion, seed_meta, srl_ckpt, train_joint,
    train_srl, with_optimizer, COMPLETION_STREAM,
};
use elhyb::pipeline::predictions::CompletionRow;
use elhyb::pipeline::report::{write_json, write_jsonl};
use elhyb::pipeline::{
    evaluate_files, report_stem, run_da, run_srl, write_corpora, DaModels, EvalOptions, Holdout, InputPath, RunConfig,
    RunReport, SrlModels, SrlSelector, Task, TrainingReport, Variant,
};
use elhyb::rng::derive_seed;
use elhyb::selection::{HiddenMode, JointDaModel, SelectionConfig, SelectionMethod};
use elhyb::understanding::{DaClassifier, SrlSide};
use elhyb::{Error, Result};
use serde::Deserialize;

use crate::{Command, Common};

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::GenData {
            config,
            seed,
            n,
            mix,
            hold_noise,
            out,
            force,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.generator.n = n.unwrap_or(cfg.generator.n);
            cfg.generator.mix = mix.unwrap_or(cfg.generator.mix);
            cfg.generator.hold_noise = hold_noise.unwrap_or(cfg.generator.hold_noise);
            cfg.validate()?;
            let corpus = generate_synthetic(cfg.seed, cfg.generator.n, &cfg.generator.synth())?;
            let dir = data_dir(out, &cfg);
            write_corpora(&dir, &corpus, force)?;
            println!("wrote {} dialogs to {}", cfg.generator.n, dir.display());
            Ok(())
        }
        Command::TrainCompletion { common, name, resume } => train_completion(&common, &name, resume),
        Command::Complete {
            common,
            input,
            out,
            beam,
            name,
        } => complete(&common, &input, out.as_deref(), beam, &name),
        Command::TrainDa {
            common,
            path,
            member,
            joint,
            hidden,
            resume,
        } => match joint {
            Some(pair) => {
                if resume {
                    return Err(Error::Config("--resume is not supported for joint models".into()));
                }
                train_joint_cmd(&common, parse_pair(&pair)?, parse_hidden(&hidden)?)
            }
            None => train_da_cmd(&common, path.parse()?, member, resume),
        },
        Command::TrainSrl { common, path, member } => train_srl_cmd(&common, path.parse()?, member),
        Command::RunGrid {
            common,
            task,
            variant,
            selection,
            r#macro,
            standard,
            out,
        } => {
            let variants = parse_variants(&variant)?;
            match task.parse::<Task>()? {
                Task::Da => grid_da(&common, &variants, &selection, averaging(r#macro), &out),
                Task::Srl => grid_srl(&common, &variants, &selection, scoring(standard), &out),
                Task::Completion => Err(Error::Config("run-grid covers the da and srl tasks".into())),
            }
        }
        Command::Evaluate {
            task,
            pred,
            gold,
            per_example,
            r#macro,
            standard,
            out,
        } => {
            let opts = EvalOptions {
                averaging: averaging(r#macro),
                scoring: scoring(standard),
                per_example: per_example.is_some(),
            };
            let mut report = evaluate_files(task.parse()?, &pred, &gold, opts)?;
            if let Some(p) = per_example {
                write_jsonl(&p, &std::mem::take(&mut report.per_example))?;
            }
            emit_json(out.as_deref(), &report)
        }
    }
}

fn averaging(macro_avg: bool) -> Averaging {
    if macro_avg {
        Averaging::Macro
    } else {
        Averaging::Micro
    }
}

fn scoring(standard: bool) -> SrlScoring {
    if standard {
        SrlScoring::Standard
    } else {
        SrlScoring::Modified
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn data_dir(flag: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    flag.or_else(|| cfg.data.dir.clone())
        .or_else(|| std::env::var_os("ELHYB_DATA_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("data"))
}

fn mapping(cfg: &RunConfig) -> Result<FieldMapping> {
    match &cfg.data.mapping {
        Some(p) => FieldMapping::load(p),
        None => Ok(FieldMapping::default()),
    }
}

struct Setup {
    cfg: RunConfig,
    data: PathBuf,
    mapping: FieldMapping,
    models: PathBuf,
}

fn setup(common: &Common) -> Result<Setup> {
    let cfg = load_config(common.config.as_deref())?;
    Ok(Setup {
        data: data_dir(common.data.clone(), &cfg),
        mapping: mapping(&cfg)?,
        models: common.models.clone(),
        cfg,
    })
}

impl Setup {
    fn corpus<T: elhyb::corpus::jsonl::Record>(&self, file: &str, hashes: &mut BTreeMap<String, String>) -> Result<Vec<T>> {
        let (v, h) = load_one(&self.data.join(file), &self.mapping)?;
        hashes.insert(file.to_string(), h);
        Ok(v)
    }

    fn ckpt(&self, file: &str) -> Result<Checkpoint> {
        load_checkpoint(&self.models.join(file))
    }

    fn completion(&self, name: &str, seeds: &mut BTreeMap<String, u64>) -> Result<CompletionModel> {
        let ck = self.ckpt(&format!("{name}.ckpt"))?;
        record_seed(&ck, seeds);
        CompletionModel::from_checkpoint(&ck)
    }

    fn save(&self, file: &str, ck: &Checkpoint) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.models).map_err(|e| Error::Io {
            path: self.models.clone(),
            source: e,
        })?;
        let p = self.models.join(file);
        ck.save(&p)?;
        Ok(p)
    }

    fn training_report(&self, file_stem: &str, report: TrainingReport) -> Result<()> {
        write_json(&self.models.join(format!("{file_stem}.report.json")), &report)
    }
}

fn record_seed(ck: &Checkpoint, seeds: &mut BTreeMap<String, u64>) {
    let extra = &ck.meta["extra"];
    if let (Some(s), Some(v)) = (extra["stream"].as_str(), extra["seed"].as_u64()) {
        seeds.insert(s.to_string(), v);
    }
}

fn stem(file: &str) -> &str {
    file.strip_suffix(".ckpt").unwrap_or(file)
}

fn train_completion(common: &Common, name: &str, resume: bool) -> Result<()> {
    let s = setup(common)?;
    let mut hashes = BTreeMap::new();
    let examples: Vec<CompletionExample> = s.corpus(COMPLETION_FILE, &mut hashes)?;
    let split = Holdout::new(examples.len(), s.cfg.data.test_fraction, s.cfg.seed)?;
    let train = pick(&examples, &split.train);
    let test = pick(&examples, &split.test);
    let file = format!("{name}.ckpt");
    let (mut model, mut opt) = if resume {
        resume_completion(&s.ckpt(&file)?, &s.cfg.completion.schedule)?
    } else {
        (new_completion(&s.cfg, &train)?, Optimizer::new(s.cfg.completion.schedule.optimizer.clone()))
    };
    let report = fit_completion(&mut model, &mut opt, &s.cfg, &train)?;
    let heldout = if test.is_empty() {
        None
    } else {
        let inputs: Vec<_> = test.iter().map(|e| (e.context.as_slice(), e.source.as_slice())).collect();
        let hyps: Vec<Vec<String>> = complete_all(&model, &inputs, s.cfg.completion.beam)?.into_iter().map(|c| c.tokens).collect();
        let refs: Vec<Vec<String>> = test.iter().map(|e| e.reference.clone()).collect();
        Some(MetricReport::completion(&hyps, &refs, false)?)
    };
    let seed = derive_seed(s.cfg.seed, COMPLETION_STREAM);
    let ck = with_optimizer(model.to_checkpoint(seed_meta(COMPLETION_STREAM, seed)), &opt, &model.store);
    let path = s.save(&file, &ck)?;
    println!(
        "{}: final loss {:.4}{}",
        path.display(),
        report.epoch_losses.last().copied().unwrap_or(f64::NAN),
        heldout
            .as_ref()
            .map(|h| format!(", held-out EM {:.4} BLEU {:.4}", h.em.unwrap_or(0.0), h.bleu.unwrap_or(0.0)))
            .unwrap_or_default()
    );
    s.training_report(
        name,
        TrainingReport {
            model: name.to_string(),
            epoch_losses: report.epoch_losses,
            examples: report.examples,
            argument_epoch_losses: None,
            heldout,
            seeds: BTreeMap::from([(COMPLETION_STREAM.to_string(), seed)]),
            corpus_hashes: hashes,
            config: s.cfg.clone(),
        },
    )
}

/// Accepts any JSONL whose lines carry `context` and `source` (or `utterance`).
#[derive(Deserialize)]
struct CompleteInput {
    #[serde(default)]
    context: Vec<DialogTurn>,
    #[serde(alias = "utterance")]
    source: Vec<String>,
}

fn complete(common: &Common, input: &Path, out: Option<&Path>, beam: Option<usize>, name: &str) -> Result<()> {
    let s = setup(common)?;
    let model = s.completion(name, &mut BTreeMap::new())?;
    let text = std::fs::read_to_string(input).map_err(|e| Error::Io {
        path: input.to_path_buf(),
        source: e,
    })?;
    let rows: Vec<CompleteInput> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Json {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect::<Result<_>>()?;
    let inputs: Vec<_> = rows.iter().map(|r| (r.context.as_slice(), r.source.as_slice())).collect();
    let done = complete_all(&model, &inputs, beam.unwrap_or(s.cfg.completion.beam))?;
    let out_rows: Vec<CompletionRow> = done
        .into_iter()
        .enumerate()
        .map(|(i, c)| CompletionRow {
            index: Some(i),
            tokens: c.tokens,
            posteriors: c.posteriors,
        })
        .collect();
    match out {
        Some(p) => write_jsonl(p, &out_rows),
        None => {
            let mut o = std::io::stdout().lock();
            for r in out_rows {
                writeln!(o, "{}", serde_json::to_string(&r).expect("rows serialise")).map_err(|e| Error::Io {
                    path: "<stdout>".into(),
                    source: e,
                })?;
            }
            Ok(())
        }
    }
}

/// DA corpus plus completions when some path reads completed utterances.
fn da_data(s: &Setup, need_cmp: bool, hashes: &mut BTreeMap<String, String>, seeds: &mut BTreeMap<String, u64>) -> Result<DaData> {
    let da: Vec<DaExample> = s.corpus(DA_FILE, hashes)?;
    let completion = if need_cmp { Some(s.completion("completion", seeds)?) } else { None };
    DaData::new(&s.cfg, &da, completion.as_ref())
}

fn train_da_cmd(common: &Common, path: InputPath, member: usize, resume: bool) -> Result<()> {
    let s = setup(common)?;
    let (mut hashes, mut seeds) = (BTreeMap::new(), BTreeMap::new());
    let data = da_data(&s, path == InputPath::Cmp, &mut hashes, &mut seeds)?;
    let inst = data.instances(path)?;
    let init = init_stream("da", path, member);
    let file = da_ckpt(path, member);
    let (mut model, mut opt) = if resume {
        let ck = s.ckpt(&file)?;
        let m = DaClassifier::from_checkpoint(&ck)?;
        let o = restore_optimizer(&ck, &s.cfg.da.schedule, &m.store)?;
        (m, o)
    } else {
        (new_da(&s.cfg, &inst, &init)?, Optimizer::new(s.cfg.da.schedule.optimizer.clone()))
    };
    let report = fit_da(&mut model, &mut opt, &s.cfg, &inst, &init)?;
    let seed = derive_seed(s.cfg.seed, &init);
    seeds.insert(init.clone(), seed);
    let ck = with_optimizer(model.to_checkpoint(seed_meta(&init, seed)), &opt, &model.store);
    let p = s.save(&file, &ck)?;
    println!("{}: final loss {:.4}", p.display(), report.epoch_losses.last().copied().unwrap_or(f64::NAN));
    s.training_report(
        stem(&file),
        TrainingReport {
            model: stem(&file).to_string(),
            epoch_losses: report.epoch_losses,
            examples: report.examples,
            argument_epoch_losses: None,
            heldout: None,
            seeds,
            corpus_hashes: hashes,
            config: s.cfg.clone(),
        },
    )
}

fn train_joint_cmd(common: &Common, pair: (InputPath, InputPath), mode: HiddenMode) -> Result<()> {
    let s = setup(common)?;
    let (mut hashes, mut seeds) = (BTreeMap::new(), BTreeMap::new());
    let need_cmp = pair.0 == InputPath::Cmp || pair.1 == InputPath::Cmp;
    let data = da_data(&s, need_cmp, &mut hashes, &mut seeds)?;
    let file = joint_ckpt(pair, mode);
    let init = format!("init-{}", stem(&file));
    let t = train_joint(&s.cfg, &data.paired(pair)?, mode, &init)?;
    seeds.insert(init.clone(), t.seed);
    let p = s.save(&file, &t.model.to_checkpoint(seed_meta(&init, t.seed)))?;
    println!("{}: final loss {:.4}", p.display(), t.report.epoch_losses.last().copied().unwrap_or(f64::NAN));
    s.training_report(
        stem(&file),
        TrainingReport {
            model: stem(&file).to_string(),
            epoch_losses: t.report.epoch_losses,
            examples: t.report.examples,
            argument_epoch_losses: None,
            heldout: None,
            seeds,
            corpus_hashes: hashes,
            config: s.cfg.clone(),
        },
    )
}

fn train_srl_cmd(common: &Common, path: InputPath, member: usize) -> Result<()> {
    let s = setup(common)?;
    let mut hashes = BTreeMap::new();
    let srl: Vec<SrlExample> = s.corpus(SRL_FILE, &mut hashes)?;
    let split = Holdout::new(srl.len(), s.cfg.data.test_fraction, s.cfg.seed)?;
    let train = pick(&srl, &split.train);
    let side = match path {
        InputPath::El => SrlSide::Original,
        InputPath::Cmp => SrlSide::Completed,
    };
    let init = init_stream("srl", path, member);
    let t = train_srl(&s.cfg, &train, side, &init)?;
    let file = srl_ckpt(path, member);
    let p = s.save(&file, &parser_checkpoint(&t.model, seed_meta(&init, t.seed)))?;
    println!(
        "{}: final losses {:.4} (predicates) {:.4} (arguments)",
        p.display(),
        t.report.predicates.epoch_losses.last().copied().unwrap_or(f64::NAN),
        t.report.arguments.epoch_losses.last().copied().unwrap_or(f64::NAN)
    );
    s.training_report(
        stem(&file),
        TrainingReport {
            model: stem(&file).to_string(),
            epoch_losses: t.report.predicates.epoch_losses,
            examples: t.report.predicates.examples,
            argument_epoch_losses: Some(t.report.arguments.epoch_losses),
            heldout: None,
            seeds: BTreeMap::from([(init, t.seed)]),
            corpus_hashes: hashes,
            config: s.cfg.clone(),
        },
    )
}

fn parse_variants(s: &str) -> Result<Vec<Variant>> {
    if s == "all" {
        return Ok(Variant::ALL.to_vec());
    }
    s.split(',').map(|v| v.trim().parse()).collect()
}

fn parse_pair(s: &str) -> Result<(InputPath, InputPath)> {
    let (a, b) = s
        .split_once('-')
        .ok_or_else(|| Error::Config(format!("--joint expects a pair such as el-cmp, got `{s}`")))?;
    Ok((a.parse()?, b.parse()?))
}

fn parse_hidden(s: &str) -> Result<HiddenMode> {
    match s {
        "sum" => Ok(HiddenMode::Sum),
        "max" => Ok(HiddenMode::Max),
        "cat" => Ok(HiddenMode::Cat),
        _ => Err(Error::Config(format!("--hidden expects sum, max or cat, got `{s}`"))),
    }
}

/// Named selection settings for hybrid variants.
fn da_methods(s: &str, base: &SelectionConfig) -> Result<Vec<(String, SelectionConfig)>> {
    let table = da_method_table(base);
    if s == "all" {
        return Ok(table);
    }
    if let Some(t) = table.iter().find(|(n, _)| n == s && n.contains('+')) {
        return Ok(vec![t.clone()]);
    }
    let method: SelectionMethod = s.parse()?;
    Ok(vec![(
        method.name().to_string(),
        SelectionConfig {
            method,
            ..base.clone()
        },
    )])
}

fn grid_da(common: &Common, variants: &[Variant], selection: &str, averaging: Averaging, out: &Path) -> Result<()> {
    let s = setup(common)?;
    let methods = da_methods(selection, &s.cfg.selection)?;
    let kinds: Vec<SelectionMethod> = methods.iter().map(|(_, c)| c.method).collect();
    let (ne, nc, joint) = da_requirements(variants, &kinds);
    let (mut hashes, mut seeds) = (BTreeMap::new(), BTreeMap::new());
    let data = da_data(&s, variants.iter().any(|v| *v != Variant::El && *v != Variant::HybridElEl), &mut hashes, &mut seeds)?;
    let mut models = DaModels::default();
    for (path, n) in [(InputPath::El, ne), (InputPath::Cmp, nc)] {
        for k in 0..n {
            let ck = s.ckpt(&da_ckpt(path, k))?;
            record_seed(&ck, &mut seeds);
            let m = DaClassifier::from_checkpoint(&ck)?;
            match path {
                InputPath::El => models.el.push(m),
                InputPath::Cmp => models.cmp.push(m),
            }
        }
    }
    for (pair, mode) in joint {
        let ck = s.ckpt(&joint_ckpt(pair, mode))?;
        record_seed(&ck, &mut seeds);
        models.joint.push((pair, mode, JointDaModel::from_checkpoint(&ck)?));
    }
    for &v in variants {
        let runs: Vec<(Option<String>, SelectionConfig)> = if v.pair().is_some() {
            methods
                .iter()
                .filter(|(n, _)| v == Variant::HybridElCmp || !n.contains('+'))
                .map(|(n, c)| (Some(n.clone()), c.clone()))
                .collect()
        } else {
            vec![(None, s.cfg.selection.clone())]
        };
        for (name, sel) in runs {
            let r = run_da(v, &sel, &models, &data.test, &data.test_completions, &data.split.test, averaging)?;
            let report = RunReport {
                experiment: s.cfg.experiment.clone(),
                task: "da".into(),
                variant: Some(v),
                method: name.clone(),
                metrics: r.metrics,
                routes: BTreeMap::new(),
                expert_short_circuits: (v == Variant::HybridElCmp).then_some(r.expert_short_circuits),
                seeds: seeds.clone(),
                corpus_hashes: hashes.clone(),
                config: RunConfig {
                    selection: sel,
                    ..s.cfg.clone()
                },
            };
            let (p, _) = elhyb::pipeline::write_run(out, &report_stem("da", v, name.as_deref()), &report, &r.log)?;
            println!(
                "{:<15} {:<18} F1 {:.4}  {}",
                v.name(),
                name.unwrap_or_else(|| "-".into()),
                report.metrics.f1.unwrap_or(0.0),
                p.display()
            );
        }
    }
    Ok(())
}

fn grid_srl(common: &Common, variants: &[Variant], selection: &str, scoring: SrlScoring, out: &Path) -> Result<()> {
    let s = setup(common)?;
    let selectors: Vec<SrlSelector> = if selection == "all" {
        vec![SrlSelector::Rule, SrlSelector::Probability]
    } else {
        vec![selection.parse()?]
    };
    let (mut hashes, mut seeds) = (BTreeMap::new(), BTreeMap::new());
    let srl: Vec<SrlExample> = s.corpus(SRL_FILE, &mut hashes)?;
    let (mut ne, mut nc) = (0, 0);
    for v in variants {
        ne = ne.max(v.members().0);
        nc = nc.max(v.members().1);
    }
    let completion = if nc > 0 { Some(s.completion("completion", &mut seeds)?) } else { None };
    let data = SrlData::new(&s.cfg, &srl, completion.as_ref())?;
    let mut models = SrlModels::default();
    for (path, n) in [(InputPath::El, ne), (InputPath::Cmp, nc)] {
        for k in 0..n {
            let ck = s.ckpt(&srl_ckpt(path, k))?;
            record_seed(&ck, &mut seeds);
            let p = parser_from_checkpoint(&ck)?;
            match path {
                InputPath::El => models.el.push(p),
                InputPath::Cmp => models.cmp.push(p),
            }
        }
    }
    for &v in variants {
        let runs: Vec<Option<SrlSelector>> = if v == Variant::HybridElCmp {
            selectors.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        for sel in runs {
            let r = run_srl(
                v,
                sel.unwrap_or(SrlSelector::Rule),
                s.cfg.selection.tau,
                &models,
                &data.test,
                &data.test_completions,
                &data.split.test,
                scoring,
            )?;
            let name = sel.map(|x| x.name().to_string());
            let report = RunReport {
                experiment: s.cfg.experiment.clone(),
                task: "srl".into(),
                variant: Some(v),
                method: name.clone(),
                metrics: r.metrics,
                routes: r.routes,
                expert_short_circuits: None,
                seeds: seeds.clone(),
                corpus_hashes: hashes.clone(),
                config: s.cfg.clone(),
            };
            let (p, _) = elhyb::pipeline::write_run(out, &report_stem("srl", v, name.as_deref()), &report, &r.log)?;
            println!(
                "{:<15} {:<12} F1 {:.4}  {}",
                v.name(),
                name.unwrap_or_else(|| "-".into()),
                report.metrics.f1.unwrap_or(0.0),
                p.display()
            );
        }
    }
    Ok(())
}

fn emit_json<T: serde::Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(p) => write_json(p, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value).expect("report serialises"));
            Ok(())
        }
    }
}

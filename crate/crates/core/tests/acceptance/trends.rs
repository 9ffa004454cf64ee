//! Criteria 3, 4 and 5: trends on the synthetic corpora at the default
//! configuration, over three seeds. Models are trained once and shared.

use std::collections::BTreeSet;
use std::time::Instant;

use elhyb::completion::CompletionModel;
use elhyb::corpus::{generate_synthetic, SyntheticCorpus};
use elhyb::eval::{exact_match, Averaging, SrlScoring};
use elhyb::pipeline::data::pick;
use elhyb::pipeline::experiment::{train_da_models, train_srl_models, DaData, SrlData};
use elhyb::pipeline::grid::da_method_table;
use elhyb::pipeline::models::{complete_all, train_completion, train_joint};
use elhyb::pipeline::{run_da, run_srl, DaModels, Holdout, InputPath, RunConfig, SrlSelector, Variant};
use elhyb::selection::{HiddenMode, SelectionMethod};

use crate::Verdict;

const SEEDS: [u64; 3] = [1, 2, 3];
const CORPUS_SIZE: usize = 2000;
const EM_FLOOR: f64 = 0.90;
const EM_GAP: f64 = 0.20;
const BUDGET_SECS: f64 = 600.0;
const SLACK: f64 = 0.005;

pub struct SeedState {
    seed: u64,
    cfg: RunConfig,
    corpus: SyntheticCorpus,
    copy: Option<CompletionModel>,
    da: Option<(DaData, DaModels)>,
}

#[derive(Default)]
pub struct Shared {
    seeds: Vec<SeedState>,
}

impl Shared {
    fn init(&mut self) {
        if !self.seeds.is_empty() {
            return;
        }
        for seed in SEEDS {
            let mut cfg = RunConfig::default();
            cfg.seed = seed;
            cfg.generator.n = CORPUS_SIZE;
            let corpus = generate_synthetic(seed, cfg.generator.n, &cfg.generator.synth()).expect("corpus");
            self.seeds.push(SeedState {
                seed,
                cfg,
                corpus,
                copy: None,
                da: None,
            });
        }
    }
}

/// Held-out exact match and training seconds of one completion model.
fn completion_run(cfg: &RunConfig, corpus: &SyntheticCorpus) -> (CompletionModel, f64, f64) {
    let split = Holdout::new(corpus.completion.len(), cfg.data.test_fraction, cfg.seed).unwrap();
    let train = pick(&corpus.completion, &split.train);
    let test = pick(&corpus.completion, &split.test);
    let t = Instant::now();
    let trained = train_completion(cfg, &train).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let inputs: Vec<_> = test.iter().map(|e| (e.context.as_slice(), e.source.as_slice())).collect();
    let hyps: Vec<Vec<String>> = complete_all(&trained.model, &inputs, cfg.completion.beam)
        .unwrap()
        .into_iter()
        .map(|c| c.tokens)
        .collect();
    let refs: Vec<Vec<String>> = test.iter().map(|e| e.reference.clone()).collect();
    (trained.model, exact_match(&hyps, &refs).unwrap(), secs)
}

pub fn copy_ablation(shared: &mut Shared) -> Verdict {
    shared.init();
    let mut rows = Vec::new();
    let mut pass = true;
    for s in &mut shared.seeds {
        let (model, em, secs) = completion_run(&s.cfg, &s.corpus);
        let mut no_copy = s.cfg.clone();
        no_copy.completion.model.copy = false;
        let (_, em_nc, secs_nc) = completion_run(&no_copy, &s.corpus);
        let ok = em >= EM_FLOOR && em - em_nc >= EM_GAP && secs <= BUDGET_SECS && secs_nc <= BUDGET_SECS;
        pass &= ok;
        rows.push(format!(
            "seed {}: copy EM {em:.3} ({secs:.0} s), no-copy EM {em_nc:.3} ({secs_nc:.0} s){}",
            s.seed,
            if ok { "" } else { " FAIL" }
        ));
        s.copy = Some(model);
    }
    Verdict::new(pass, format!("{} examples; {}", CORPUS_SIZE, rows.join("; ")))
}

fn ensure_copy(s: &mut SeedState) {
    if s.copy.is_none() {
        s.copy = Some(completion_run(&s.cfg, &s.corpus).0);
    }
}

struct Family {
    name: &'static str,
    el: Vec<f64>,
    cmp: Vec<f64>,
    hybrid: Vec<f64>,
}

impl Family {
    fn new(name: &'static str) -> Self {
        Family {
            name,
            el: vec![],
            cmp: vec![],
            hybrid: vec![],
        }
    }

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    fn holds(&self) -> bool {
        let per_seed = (0..self.hybrid.len()).all(|i| self.hybrid[i] >= self.el[i].max(self.cmp[i]) - SLACK);
        per_seed && Self::mean(&self.hybrid) > Self::mean(&self.el).max(Self::mean(&self.cmp))
    }

    fn describe(&self) -> String {
        let seeds: Vec<String> = (0..self.hybrid.len())
            .map(|i| format!("{:.3}/{:.3}/{:.3}", self.el[i], self.cmp[i], self.hybrid[i]))
            .collect();
        format!(
            "{} EL/CMP/Hybrid {} mean {:.3}/{:.3}/{:.3}{}",
            self.name,
            seeds.join(" "),
            Self::mean(&self.el),
            Self::mean(&self.cmp),
            Self::mean(&self.hybrid),
            if self.holds() { "" } else { " FAIL" }
        )
    }
}

pub fn hybrid_dominance(shared: &mut Shared) -> Verdict {
    shared.init();
    let variants = [Variant::El, Variant::Cmp, Variant::HybridElCmp];
    let mut da = Family::new("DA");
    let mut rule = Family::new("SRL rule");
    let mut prob = Family::new("SRL probability");
    for s in &mut shared.seeds {
        ensure_copy(s);
        let cfg = &s.cfg;
        let completion = s.copy.as_ref();

        let data = DaData::new(cfg, &s.corpus.da, completion).unwrap();
        let (models, _) = train_da_models(cfg, &data, &variants, &[SelectionMethod::LogitsSum]).unwrap();
        let f1 = |v: Variant| {
            run_da(v, &cfg.selection, &models, &data.test, &data.test_completions, &data.split.test, Averaging::Micro)
                .unwrap()
                .metrics
                .f1
                .unwrap()
        };
        da.el.push(f1(Variant::El));
        da.cmp.push(f1(Variant::Cmp));
        da.hybrid.push(f1(Variant::HybridElCmp));

        let srl = SrlData::new(cfg, &s.corpus.srl, completion).unwrap();
        let (parsers, _) = train_srl_models(cfg, &srl, &variants).unwrap();
        let f1 = |v: Variant, sel: SrlSelector| {
            run_srl(
                v,
                sel,
                cfg.selection.tau,
                &parsers,
                &srl.test,
                &srl.test_completions,
                &srl.split.test,
                SrlScoring::Modified,
            )
            .unwrap()
            .metrics
            .f1
            .unwrap()
        };
        let (el, cmp) = (f1(Variant::El, SrlSelector::Rule), f1(Variant::Cmp, SrlSelector::Rule));
        for (fam, sel) in [(&mut rule, SrlSelector::Rule), (&mut prob, SrlSelector::Probability)] {
            fam.el.push(el);
            fam.cmp.push(cmp);
            fam.hybrid.push(f1(Variant::HybridElCmp, sel));
        }
        s.da = Some((data, models));
    }
    let fams = [&da, &rule, &prob];
    Verdict::new(
        fams.iter().all(|f| f.holds()),
        fams.iter().map(|f| f.describe()).collect::<Vec<_>>().join("; "),
    )
}

pub fn selection_methods(shared: &mut Shared) -> Verdict {
    shared.init();
    let mut notes = Vec::new();
    let mut pass = true;

    // Expert never hurts logits_sum, on every seed with trained classifiers.
    for s in &mut shared.seeds {
        if s.da.is_none() {
            ensure_copy(s);
            let data = DaData::new(&s.cfg, &s.corpus.da, s.copy.as_ref()).unwrap();
            let (models, _) =
                train_da_models(&s.cfg, &data, &[Variant::HybridElCmp], &[SelectionMethod::LogitsSum]).unwrap();
            s.da = Some((data, models));
        }
    }
    for (k, s) in shared.seeds.iter_mut().enumerate() {
        let cfg = s.cfg.clone();
        let (data, models) = s.da.as_mut().unwrap();
        let non_completable: BTreeSet<usize> = cfg.selection.non_completable.iter().copied().collect();
        let gold_non = data.test.iter().filter(|e| e.labels.iter().any(|l| non_completable.contains(l))).count();

        // All six methods on the first seed, which needs the joint models.
        let table = da_method_table(&cfg.selection);
        let table: Vec<_> = if k == 0 {
            for mode in [HiddenMode::Sum, HiddenMode::Max, HiddenMode::Cat] {
                let pair = (InputPath::El, InputPath::Cmp);
                let name = format!("init-joint-el-cmp-{mode:?}").to_lowercase();
                let t = train_joint(&cfg, &data.paired(pair).unwrap(), mode, &name).unwrap();
                models.joint.push((pair, mode, t.model));
            }
            table
        } else {
            table
                .into_iter()
                .filter(|(_, c)| c.method == SelectionMethod::LogitsSum)
                .collect()
        };
        let mut scores = Vec::new();
        let mut keys: Option<Vec<String>> = None;
        let mut comparable = true;
        let mut short_circuits = 0;
        for (name, sel) in &table {
            let r = run_da(
                Variant::HybridElCmp,
                sel,
                models,
                &data.test,
                &data.test_completions,
                &data.split.test,
                Averaging::Micro,
            );
            let Ok(r) = r else {
                comparable = false;
                continue;
            };
            let v = serde_json::to_value(&r.metrics).unwrap();
            let these: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
            comparable &= keys.get_or_insert_with(|| these.clone()) == &these
                && r.metrics.examples == data.test.len()
                && r.metrics.f1.is_some_and(|f| (0.0..=1.0).contains(&f));
            if name.contains("expert") {
                short_circuits = r.expert_short_circuits;
            }
            scores.push((name.clone(), r.metrics.f1.unwrap_or(f64::NAN)));
        }
        let get = |n: &str| scores.iter().find(|(m, _)| m == n).map(|x| x.1).unwrap_or(f64::NAN);
        let ordered = get("logits_sum+expert") >= get("logits_sum");
        let ok = comparable && ordered && gold_non > 0 && (k > 0 || scores.len() == 6);
        pass &= ok;
        let listed: Vec<String> = scores.iter().map(|(n, f)| format!("{n} {f:.3}")).collect();
        notes.push(format!(
            "seed {}: {} ({gold_non} non-completable gold, {short_circuits} short-circuits){}",
            s.seed,
            listed.join(", "),
            if ok { "" } else { " FAIL" }
        ));
    }
    Verdict::new(pass, notes.join("; "))
}

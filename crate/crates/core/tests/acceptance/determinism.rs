//! Criterion 9: identical seed and config give identical bytes.

use elhyb::corpus::generate_synthetic;
use elhyb::corpus::jsonl::to_jsonl;
use elhyb::eval::{Averaging, SrlScoring};
use elhyb::pipeline::experiment::{train_da_models, train_srl_models, DaData, SrlData};
use elhyb::pipeline::models::{completion_checkpoint, parser_checkpoint, train_completion};
use elhyb::pipeline::{run_da, run_srl, RunConfig, SrlSelector, Variant};
use elhyb::selection::SelectionMethod;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::Verdict;

fn tiny() -> RunConfig {
    let mut c = RunConfig::default();
    c.seed = 9;
    c.generator.n = 80;
    c.completion.model.embedding = 8;
    c.completion.model.hidden = 16;
    c.completion.schedule.epochs = 2;
    c.da.model.embedding = 8;
    c.da.model.hidden = 12;
    c.da.schedule.epochs = 2;
    c.srl.model.embedding = 8;
    c.srl.model.hidden = 12;
    c.srl.schedule.epochs = 2;
    c
}

/// Named byte artefacts of one full run.
fn run(cfg: &RunConfig) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let c = generate_synthetic(cfg.seed, cfg.generator.n, &cfg.generator.synth()).unwrap();
    out.push(("completion.jsonl".into(), to_jsonl(&c.completion).into_bytes()));
    out.push(("da.jsonl".into(), to_jsonl(&c.da).into_bytes()));
    out.push(("srl.jsonl".into(), to_jsonl(&c.srl).into_bytes()));

    let completion = train_completion(cfg, &c.completion).unwrap();
    out.push(("completion.ckpt".into(), completion_checkpoint(&completion).to_bytes()));

    let da = DaData::new(cfg, &c.da, Some(&completion.model)).unwrap();
    let methods = [SelectionMethod::LogitsSum, SelectionMethod::HiddenSum];
    let (models, _) = train_da_models(cfg, &da, &[Variant::HybridElCmp], &methods).unwrap();
    out.push(("da-el.ckpt".into(), models.el[0].to_checkpoint(json!({})).to_bytes()));
    out.push(("da-cmp.ckpt".into(), models.cmp[0].to_checkpoint(json!({})).to_bytes()));
    out.push(("joint.ckpt".into(), models.joint[0].2.to_checkpoint(json!({})).to_bytes()));
    for m in methods {
        let sel = elhyb::selection::SelectionConfig {
            method: m,
            ..cfg.selection.clone()
        };
        let r = run_da(Variant::HybridElCmp, &sel, &models, &da.test, &da.test_completions, &da.split.test, Averaging::Micro).unwrap();
        let report = json!({ "metrics": r.metrics, "log": r.log });
        out.push((format!("da-{}.json", m.name()), serde_json::to_vec(&report).unwrap()));
    }

    let srl = SrlData::new(cfg, &c.srl, Some(&completion.model)).unwrap();
    let (parsers, _) = train_srl_models(cfg, &srl, &[Variant::HybridElCmp]).unwrap();
    out.push(("srl-el.ckpt".into(), parser_checkpoint(&parsers.el[0], json!({})).to_bytes()));
    out.push(("srl-cmp.ckpt".into(), parser_checkpoint(&parsers.cmp[0], json!({})).to_bytes()));
    for sel in [SrlSelector::Rule, SrlSelector::Probability] {
        let r = run_srl(
            Variant::HybridElCmp,
            sel,
            cfg.selection.tau,
            &parsers,
            &srl.test,
            &srl.test_completions,
            &srl.split.test,
            SrlScoring::Modified,
        )
        .unwrap();
        let report = json!({ "metrics": r.metrics, "routes": r.routes, "log": r.log });
        out.push((format!("srl-{}.json", sel.name()), serde_json::to_vec(&report).unwrap()));
    }
    out
}

pub fn two_runs() -> Verdict {
    let cfg = tiny();
    let a = run(&cfg);
    let b = run(&cfg);
    let differing: Vec<&str> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    let digest = Sha256::digest(a.iter().flat_map(|(_, bytes)| bytes.iter().copied()).collect::<Vec<u8>>());
    Verdict::new(
        differing.is_empty() && a.len() == b.len(),
        if differing.is_empty() {
            format!("{} corpora, checkpoints and reports bit-identical across two runs (sha256 {:.16x})", a.len(), digest)
        } else {
            format!("differing artefacts: {}", differing.join(", "))
        },
    )
}

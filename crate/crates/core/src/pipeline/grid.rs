//! The five experiment variants, run over a held-out set.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::models::InputPath;
use crate::completion::Completed;
use crate::corpus::inventory::{act_id, act_name};
use crate::corpus::{DaExample, SrlExample};
use crate::error::{Error, Result};
use crate::eval::{Averaging, MetricReport, PredictedFrames, SrlScoring};
use crate::exec::try_par_map;
use crate::selection::{
    align, da_select, srl_select_probability, srl_select_rule, DaRoute, HiddenMode, JointDaModel, SelectionConfig,
    SelectionMethod, SrlRoute,
};
use crate::understanding::{da_decide, DaClassifier, SrlFrame, SrlParser};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "EL")]
    El,
    #[serde(rename = "CMP")]
    Cmp,
    #[serde(rename = "Hybrid-EL-EL")]
    HybridElEl,
    #[serde(rename = "Hybrid-CMP-CMP")]
    HybridCmpCmp,
    #[serde(rename = "Hybrid-EL-CMP")]
    HybridElCmp,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::El,
        Variant::Cmp,
        Variant::HybridElEl,
        Variant::HybridCmpCmp,
        Variant::HybridElCmp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::El => "EL",
            Variant::Cmp => "CMP",
            Variant::HybridElEl => "Hybrid-EL-EL",
            Variant::HybridCmpCmp => "Hybrid-CMP-CMP",
            Variant::HybridElCmp => "Hybrid-EL-CMP",
        }
    }

    /// The two member paths of a hybrid, `None` for single-path variants.
    pub fn pair(self) -> Option<(InputPath, InputPath)> {
        match self {
            Variant::El | Variant::Cmp => None,
            Variant::HybridElEl => Some((InputPath::El, InputPath::El)),
            Variant::HybridCmpCmp => Some((InputPath::Cmp, InputPath::Cmp)),
            Variant::HybridElCmp => Some((InputPath::El, InputPath::Cmp)),
        }
    }

    /// Classifiers needed per path: `(el, cmp)`.
    pub fn members(self) -> (usize, usize) {
        match self {
            Variant::El => (1, 0),
            Variant::Cmp => (0, 1),
            Variant::HybridElEl => (2, 0),
            Variant::HybridCmpCmp => (0, 2),
            Variant::HybridElCmp => (1, 1),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown variant `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SrlSelector {
    Rule,
    Probability,
}

impl SrlSelector {
    pub fn name(self) -> &'static str {
        match self {
            SrlSelector::Rule => "rule",
            SrlSelector::Probability => "probability",
        }
    }
}

impl std::str::FromStr for SrlSelector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rule" => Ok(SrlSelector::Rule),
            "probability" => Ok(SrlSelector::Probability),
            _ => Err(Error::Config(format!("unknown SRL selector `{s}` (rule or probability)"))),
        }
    }
}

fn joined(t: &[String]) -> String {
    t.join(" ")
}

fn names(ids: &[usize]) -> Vec<String> {
    ids.iter().map(|&i| act_name(i).to_string()).collect()
}

fn need<'a, T>(v: &'a [T], k: usize, what: &str, variant: Variant) -> Result<&'a T> {
    v.get(k)
        .ok_or_else(|| Error::Config(format!("{variant} needs {} {what} model(s), {} given", k + 1, v.len())))
}

fn check_completions(n: usize, completions: &[Completed]) -> Result<()> {
    if n != completions.len() {
        return Err(Error::invalid(format!("{n} test examples but {} completions", completions.len())));
    }
    Ok(())
}

// ---- dialog acts

/// Dialog-act models by path. Ensemble members are indexed from 0.
#[derive(Clone, Debug, Default)]
pub struct DaModels {
    pub el: Vec<DaClassifier>,
    pub cmp: Vec<DaClassifier>,
    pub joint: Vec<((InputPath, InputPath), HiddenMode, JointDaModel)>,
}

impl DaModels {
    fn joint_for(&self, pair: (InputPath, InputPath), mode: HiddenMode) -> Option<&JointDaModel> {
        self.joint.iter().find(|(p, m, _)| *p == pair && *m == mode).map(|(_, _, j)| j)
    }
}

/// One line of a dialog-act run log; also readable as a prediction record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DaLogEntry {
    pub index: usize,
    pub utterance: String,
    pub completed: String,
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route: Option<DaRoute>,
}

impl DaLogEntry {
    pub fn label_ids(&self) -> Result<Vec<usize>> {
        let mut ids = self
            .labels
            .iter()
            .map(|l| act_id(l).ok_or_else(|| Error::invalid(format!("unknown dialog act `{l}`"))))
            .collect::<Result<Vec<_>>>()?;
        ids.sort_unstable();
        ids.dedup();
        Ok(ids)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DaRun {
    pub predictions: Vec<Vec<usize>>,
    pub log: Vec<DaLogEntry>,
    pub expert_short_circuits: usize,
    pub metrics: MetricReport,
}

/// Runs `variant` on `examples`, whose utterances were completed into
/// `completions`. `indices` are the corpus positions written to the log.
pub fn run_da(
    variant: Variant,
    selection: &SelectionConfig,
    models: &DaModels,
    examples: &[DaExample],
    completions: &[Completed],
    indices: &[usize],
    averaging: Averaging,
) -> Result<DaRun> {
    check_completions(examples.len(), completions)?;
    let (ne, nc) = variant.members();
    let el: Vec<&DaClassifier> = (0..ne).map(|k| need(&models.el, k, "EL", variant)).collect::<Result<_>>()?;
    let cmp: Vec<&DaClassifier> = (0..nc).map(|k| need(&models.cmp, k, "CMP", variant)).collect::<Result<_>>()?;
    let joint = match (variant.pair(), selection.method.hidden_mode()) {
        (Some(pair), Some(mode)) => Some(models.joint_for(pair, mode).ok_or_else(|| {
            Error::Config(format!("{variant} with {} needs a joint {}-{} model", selection.method, pair.0.name(), pair.1.name()))
        })?),
        _ => None,
    };
    // The expert rule belongs to the EL/CMP combination only.
    let sel = SelectionConfig {
        expert: selection.expert && variant == Variant::HybridElCmp,
        ..selection.clone()
    };
    let items: Vec<usize> = (0..examples.len()).collect();
    let out = try_par_map(&items, |&i| {
        let ex = &examples[i];
        let comp = &completions[i].tokens;
        let input = |p: InputPath| match p {
            InputPath::El => &ex.utterance,
            InputPath::Cmp => comp,
        };
        let (labels, route) = match variant {
            Variant::El => (da_decide(&el[0].forward(&ex.context, &ex.utterance)?.probs, sel.theta), None),
            Variant::Cmp => (da_decide(&cmp[0].forward(&ex.context, comp)?.probs, sel.theta), None),
            _ => {
                let (pa, pb) = variant.pair().expect("hybrid");
                let (ma, mb) = match variant {
                    Variant::HybridElEl => (el[0], el[1]),
                    Variant::HybridCmpCmp => (cmp[0], cmp[1]),
                    _ => (el[0], cmp[0]),
                };
                let pred_a = ma.forward(&ex.context, input(pa))?;
                let pred_b = mb.forward(&ex.context, input(pb))?;
                let d = match joint {
                    Some(j) => Some(j.forward(&ex.context, input(pa), input(pb))?.2),
                    None => None,
                };
                let s = da_select(&pred_a, &pred_b, d.as_deref(), &sel)?;
                (s.labels, Some(s.route))
            }
        };
        Ok(DaLogEntry {
            index: indices.get(i).copied().unwrap_or(i),
            utterance: joined(&ex.utterance),
            completed: joined(comp),
            labels: names(&labels),
            route,
        })
    })?;
    let predictions: Vec<Vec<usize>> = out.iter().map(|e| e.label_ids()).collect::<Result<_>>()?;
    let gold: Vec<Vec<usize>> = examples.iter().map(|e| e.labels.clone()).collect();
    let metrics = MetricReport::dialog_acts(&predictions, &gold, averaging, false)?;
    Ok(DaRun {
        expert_short_circuits: out.iter().filter(|e| e.route == Some(DaRoute::Expert)).count(),
        predictions,
        log: out,
        metrics,
    })
}

// ---- semantic roles

#[derive(Clone, Debug, Default)]
pub struct SrlModels {
    pub el: Vec<SrlParser>,
    pub cmp: Vec<SrlParser>,
}

/// One line of an SRL run log. `frames` index the completed tokens when
/// `on_completed` is set, the original tokens otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SrlLogEntry {
    pub index: usize,
    pub utterance: Vec<String>,
    pub completed: Vec<String>,
    pub on_completed: bool,
    pub frames: Vec<SrlFrame>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route: Option<SrlRoute>,
}

impl SrlLogEntry {
    pub fn predicted(&self) -> PredictedFrames {
        if self.on_completed {
            PredictedFrames::Completed {
                frames: self.frames.clone(),
                len: self.completed.len(),
                alignment: Some(align(&self.utterance, &self.completed)),
            }
        } else {
            PredictedFrames::Original(self.frames.clone())
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SrlRun {
    pub log: Vec<SrlLogEntry>,
    pub routes: BTreeMap<String, usize>,
    pub metrics: MetricReport,
}

fn route_name(r: SrlRoute) -> &'static str {
    match r {
        SrlRoute::Original => "original",
        SrlRoute::Completed => "completed",
        SrlRoute::Merged => "merged",
    }
}

#[allow(clippy::too_many_arguments)]
pub fn run_srl(
    variant: Variant,
    selector: SrlSelector,
    tau: f64,
    models: &SrlModels,
    examples: &[SrlExample],
    completions: &[Completed],
    indices: &[usize],
    scoring: SrlScoring,
) -> Result<SrlRun> {
    check_completions(examples.len(), completions)?;
    let (ne, nc) = variant.members();
    let el: Vec<&SrlParser> = (0..ne).map(|k| need(&models.el, k, "EL", variant)).collect::<Result<_>>()?;
    let cmp: Vec<&SrlParser> = (0..nc).map(|k| need(&models.cmp, k, "CMP", variant)).collect::<Result<_>>()?;
    let items: Vec<usize> = (0..examples.len()).collect();
    let log = try_par_map(&items, |&i| {
        let utt = &examples[i].utterance;
        let comp = &completions[i];
        let (frames, on_completed, route) = match variant {
            Variant::El | Variant::HybridElEl => (SrlParser::parse_ensemble(&el, utt)?.frames, false, None),
            Variant::Cmp | Variant::HybridCmpCmp => (SrlParser::parse_ensemble(&cmp, &comp.tokens)?.frames, true, None),
            Variant::HybridElCmp => {
                let e = el[0].parse(utt)?.frames;
                let c = cmp[0].parse(&comp.tokens)?.frames;
                let al = align(utt, &comp.tokens);
                let (f, r) = match selector {
                    SrlSelector::Rule => srl_select_rule(&e, &c, &al, comp.tokens.len()),
                    SrlSelector::Probability => srl_select_probability(&e, &c, &comp.posteriors, &al, tau)?,
                };
                (f, false, Some(r))
            }
        };
        Ok(SrlLogEntry {
            index: indices.get(i).copied().unwrap_or(i),
            utterance: utt.clone(),
            completed: comp.tokens.clone(),
            on_completed,
            frames,
            route,
        })
    })?;
    let mut routes = BTreeMap::new();
    for r in log.iter().filter_map(|e| e.route) {
        *routes.entry(route_name(r).to_string()).or_insert(0) += 1;
    }
    let pred: Vec<PredictedFrames> = log.iter().map(SrlLogEntry::predicted).collect();
    let gold: Vec<Vec<SrlFrame>> = examples.iter().map(|e| e.gold_frames()).collect();
    let metrics = MetricReport::srl(&pred, &gold, scoring, false)?;
    Ok(SrlRun { log, routes, metrics })
}

/// Every DA method of the selection table: the five combinations with the
/// expert rule off, then logits-sum with it on.
pub fn da_method_table(base: &SelectionConfig) -> Vec<(String, SelectionConfig)> {
    let mut out: Vec<(String, SelectionConfig)> = SelectionMethod::ALL
        .iter()
        .map(|&m| {
            (
                m.name().to_string(),
                SelectionConfig {
                    method: m,
                    expert: false,
                    ..base.clone()
                },
            )
        })
        .collect();
    out.push((
        "logits_sum+expert".into(),
        SelectionConfig {
            method: SelectionMethod::LogitsSum,
            expert: true,
            ..base.clone()
        },
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
            assert_eq!(serde_json::to_value(v).unwrap(), v.name());
        }
        assert!("Hybrid".parse::<Variant>().is_err());
        assert_eq!(da_method_table(&SelectionConfig::default()).len(), 6);
    }
}

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::metrics::{bleu, exact_match, multilabel_prf, srl_span_prf, word_prf, Averaging, PredictedFrames, Prf, SrlScoring};
use crate::corpus::inventory::act_name;
use crate::error::Result;
use crate::understanding::SrlFrame;

/// Scores of one task over one corpus. Fields that do not apply are omitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub examples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bleu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub em: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_example: Vec<Value>,
}

impl MetricReport {
    fn with_prf(metric: &str, examples: usize, prf: Prf) -> Self {
        MetricReport {
            metric: metric.to_string(),
            examples,
            precision: Some(prf.precision),
            recall: Some(prf.recall),
            f1: Some(prf.f1),
            bleu: None,
            em: None,
            per_example: Vec::new(),
        }
    }

    /// BLEU-4, exact match and token-multiset PRF.
    pub fn completion(hyps: &[Vec<String>], refs: &[Vec<String>], per_example: bool) -> Result<Self> {
        let mut r = Self::with_prf("completion", hyps.len(), word_prf(hyps, refs)?);
        r.bleu = Some(if hyps.is_empty() { 0.0 } else { bleu(hyps, refs, 4)? });
        r.em = Some(exact_match(hyps, refs)?);
        if per_example {
            r.per_example = hyps
                .iter()
                .zip(refs)
                .map(|(h, g)| json!({"hypothesis": h.join(" "), "reference": g.join(" "), "exact": h == g}))
                .collect();
        }
        Ok(r)
    }

    pub fn dialog_acts(pred: &[Vec<usize>], gold: &[Vec<usize>], averaging: Averaging, per_example: bool) -> Result<Self> {
        let mut r = Self::with_prf("dialog_act", pred.len(), multilabel_prf(pred, gold, averaging)?);
        if per_example {
            let names = |s: &[usize]| s.iter().map(|&l| act_name(l)).collect::<Vec<_>>();
            r.per_example = pred
                .iter()
                .zip(gold)
                .map(|(p, g)| json!({"predicted": names(p), "gold": names(g)}))
                .collect();
        }
        Ok(r)
    }

    pub fn srl(pred: &[PredictedFrames], gold: &[Vec<SrlFrame>], mode: SrlScoring, per_example: bool) -> Result<Self> {
        let mut r = Self::with_prf("srl", pred.len(), srl_span_prf(pred, gold, mode)?);
        if per_example {
            r.per_example = pred
                .iter()
                .zip(gold)
                .map(|(p, g)| {
                    let one = srl_span_prf(std::slice::from_ref(p), std::slice::from_ref(g), mode)?;
                    Ok(json!({"correct": one.correct, "predicted": one.predicted, "gold": one.gold}))
                })
                .collect::<Result<_>>()?;
        }
        Ok(r)
    }

    /// Every reported score lies in [0, 1].
    pub fn in_range(&self) -> bool {
        [self.precision, self.recall, self.f1, self.bleu, self.em]
            .into_iter()
            .flatten()
            .all(|x| (0.0..=1.0).contains(&x))
    }
}

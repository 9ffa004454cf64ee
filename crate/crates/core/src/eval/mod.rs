//! Completion, dialog-act and SRL metrics.

pub mod metrics;
pub mod report;

pub use metrics::{
    bleu, exact_match, f1, multilabel_prf, srl_span_prf, word_prf, Averaging, PredictedFrames, Prf, SrlScoring,
};
pub use report::MetricReport;

//! Dialog act classification and semantic role tagging.

pub mod bio;
pub mod da;
pub mod frames;
pub mod srl;

pub use bio::{is_valid_bio, viterbi_bio, Span, TagSet};
pub use da::{da_decide, da_train, ClassifierReport, DaClassifier, DaConfig, DaEncoder, DaInstance, DaPrediction};
pub use frames::{extract_frames, has_predicate, Argument, Predicate, SrlFrame};
pub use srl::{srl_instances, srl_train, srl_vocab, SrlConfig, SrlInstance, SrlParse, SrlParser, SrlSide, SrlTagger};

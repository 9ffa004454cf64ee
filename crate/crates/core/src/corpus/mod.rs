//! Dialog data model, vocabularies, JSONL ingestion, splitting and the
//! synthetic corpus generator.

pub mod inventory;
pub mod jsonl;
pub mod split;
pub mod synth;
pub mod types;
pub mod vocab;

pub use jsonl::{load_corpus, load_jsonl, save_jsonl, Corpus, CorpusKind, FieldMapping};
pub use split::{kfold_split, Split};
pub use synth::{generate_synthetic, Mix, SynthConfig, SyntheticCorpus};
pub use types::{
    tokenize, CompletionCase, CompletionExample, DaExample, DialogTurn, PredicateSource, Speaker, SrlAnnotation,
    SrlExample,
};
pub use vocab::{build_vocab, encode_source, encode_target, EncodedSource, ExtendedVocab, Vocabulary};

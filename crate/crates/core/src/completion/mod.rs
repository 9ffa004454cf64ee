//! Pointer-generator utterance completion: model, mixture, training and
//! greedy/beam decoding with per-token posteriors.

pub mod beam;
pub mod mixture;
pub mod model;
pub mod train;


pub use beam::{beam_search, greedy, BeamHypothesis, StepModel};
pub use mixture::{mixture, MixtureMode};
pub use model::{Completed, CompletionConfig, CompletionModel, DecoderStepOutput};
pub use train::{completion_vocab, train, TrainReport};

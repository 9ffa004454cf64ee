//! Minimal differentiable numeric substrate: tensors, parameters, a reverse-mode
//! tape, recurrent cells, attention, optimizers and a checkpoint container.

pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod optim;
pub mod param;
pub mod tape;
pub mod tensor;
pub mod train;

pub use checkpoint::Checkpoint;
pub use gradcheck::gradient_check;
pub use layers::{dropout, AdditiveAttention, BiLstm, HighwayLstmCell, LstmCell, Mode};
pub use optim::{Optimizer, OptimizerConfig};
pub use param::{Init, ParamId, ParamStore, Parameter};
pub use tape::{Tape, Var};
pub use tensor::{sigmoid, softmax, softmax_axis, Tensor};
pub use train::{run_epochs, Schedule};

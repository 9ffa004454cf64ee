pub mod completion;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod exec;
pub mod nn;
pub mod pipeline;
pub mod rng;
pub mod selection;
pub mod understanding;

pub use error::{Error, Result};

//! The hybrid layer: combining the original and completed paths.

pub mod align;
pub mod combine;
pub mod config;
pub mod srl_select;

pub use align::{align, invert, project_frames};
pub use combine::{
    combine_hidden, combine_logits, combined_theta, da_select, joint_train, CombinedHead, DaRoute, DaSelection,
    HiddenMode, JointDaModel, LogitsMode, PairedInstance,
};
pub use config::{SelectionConfig, SelectionMethod};
pub use srl_select::{srl_select_probability, srl_select_rule, SrlRoute};

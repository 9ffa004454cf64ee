use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::inventory::{act_ids, act_name, DEFAULT_NON_COMPLETABLE};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    #[default]
    LogitsSum,
    LogitsMax,
    HiddenSum,
    HiddenMax,
    HiddenCat,
}

impl SelectionMethod {
    pub const ALL: [SelectionMethod; 5] = [
        SelectionMethod::LogitsSum,
        SelectionMethod::LogitsMax,
        SelectionMethod::HiddenSum,
        SelectionMethod::HiddenMax,
        SelectionMethod::HiddenCat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SelectionMethod::LogitsSum => "logits_sum",
            SelectionMethod::LogitsMax => "logits_max",
            SelectionMethod::HiddenSum => "hidden_sum",
            SelectionMethod::HiddenMax => "hidden_max",
            SelectionMethod::HiddenCat => "hidden_cat",
        }
    }

    pub fn is_hidden(self) -> bool {
        matches!(self, SelectionMethod::HiddenSum | SelectionMethod::HiddenMax | SelectionMethod::HiddenCat)
    }

    pub fn hidden_mode(self) -> Option<super::HiddenMode> {
        use super::HiddenMode;
        match self {
            SelectionMethod::HiddenSum => Some(HiddenMode::Sum),
            SelectionMethod::HiddenMax => Some(HiddenMode::Max),
            SelectionMethod::HiddenCat => Some(HiddenMode::Cat),
            _ => None,
        }
    }
}

impl std::str::FromStr for SelectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown selection method `{s}`")))
    }
}

impl std::fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Selection settings. On disk the non-completable acts are listed by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SelectionFile", into = "SelectionFile")]
pub struct SelectionConfig {
    pub method: SelectionMethod,
    /// Act ids that are never predicted from the completed utterance.
    pub non_completable: Vec<usize>,
    /// Beam-posterior threshold of the probability-based SRL selector.
    pub tau: f64,
    /// Dialog-act decision threshold.
    pub theta: f64,
    /// Dialog-act expert short-circuit.
    pub expert: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectionFile {
    #[serde(default)]
    method: SelectionMethod,
    #[serde(default = "default_non_completable")]
    non_completable: Vec<String>,
    #[serde(default = "half")]
    tau: f64,
    #[serde(default = "half")]
    theta: f64,
    #[serde(default = "yes")]
    expert: bool,
}

fn default_non_completable() -> Vec<String> {
    DEFAULT_NON_COMPLETABLE.iter().map(|s| s.to_string()).collect()
}

fn half() -> f64 {
    0.5
}

fn yes() -> bool {
    true
}

impl TryFrom<SelectionFile> for SelectionConfig {
    type Error = Error;

    fn try_from(f: SelectionFile) -> Result<Self> {
        let mut non_completable = act_ids(&f.non_completable).map_err(|e| Error::Config(e.to_string()))?;
        non_completable.sort_unstable();
        non_completable.dedup();
        let c = SelectionConfig {
            method: f.method,
            non_completable,
            tau: f.tau,
            theta: f.theta,
            expert: f.expert,
        };
        c.validate()?;
        Ok(c)
    }
}

impl From<SelectionConfig> for SelectionFile {
    fn from(c: SelectionConfig) -> Self {
        SelectionFile {
            method: c.method,
            non_completable: c.non_completable.iter().map(|&i| act_name(i).to_string()).collect(),
            tau: c.tau,
            theta: c.theta,
            expert: c.expert,
        }
    }
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig::try_from(toml::from_str::<SelectionFile>("").expect("empty selection file"))
            .expect("default selection config")
    }
}

impl SelectionConfig {
    /// `tau` may exceed 1 (every completion rejected); it must not be negative.
    pub fn validate(&self) -> Result<()> {
        if !(self.tau >= 0.0) {
            return Err(Error::Config("tau must be nonnegative".into()));
        }
        if !(self.theta >= 0.0) {
            return Err(Error::Config("theta must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("selection config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("selection config serialises")
    }
}

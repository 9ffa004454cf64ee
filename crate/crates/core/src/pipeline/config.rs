use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::completion::CompletionConfig;
use crate::corpus::{Mix, SynthConfig};
use crate::error::{Error, Result};
use crate::nn::{OptimizerConfig, Schedule};
use crate::selection::SelectionConfig;
use crate::understanding::{DaConfig, SrlConfig};

/// Everything a run depends on. Serialized into every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub experiment: String,
    pub seed: u64,
    pub data: DataConfig,
    pub generator: GeneratorConfig,
    pub completion: CompletionSection,
    pub da: DaSection,
    pub srl: SrlSection,
    pub selection: SelectionConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// Corpus directory; when absent the caller's default (ELHYB_DATA_DIR) applies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Field-mapping file for ingesting external JSONL.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mapping: Option<PathBuf>,
    /// Share of every corpus held out for testing.
    pub test_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub n: usize,
    pub mix: Mix,
    pub hold_noise: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompletionSection {
    pub model: CompletionConfig,
    pub schedule: Schedule,
    pub min_count: usize,
    /// Beam width used when completing utterances for the CMP path.
    pub beam: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DaSection {
    pub model: DaConfig,
    pub schedule: Schedule,
    pub min_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SrlSection {
    pub model: SrlConfig,
    pub schedule: Schedule,
    pub min_count: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: "desk".into(),
            seed: 1,
            data: DataConfig::default(),
            generator: GeneratorConfig::default(),
            completion: CompletionSection::default(),
            da: DaSection::default(),
            srl: SrlSection::default(),
            selection: SelectionConfig::default(),
        }
    }
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            dir: None,
            mapping: None,
            test_fraction: 0.2,
        }
    }
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        let s = SynthConfig::default();
        GeneratorConfig {
            n: 2000,
            mix: s.mix,
            hold_noise: s.hold_noise,
        }
    }
}

impl GeneratorConfig {
    pub fn synth(&self) -> SynthConfig {
        SynthConfig {
            mix: self.mix,
            hold_noise: self.hold_noise,
        }
    }
}

impl Default for CompletionSection {
    fn default() -> Self {
        CompletionSection {
            model: CompletionConfig::default(),
            schedule: Schedule::default(),
            min_count: 2,
            beam: 4,
        }
    }
}

fn adam_schedule() -> Schedule {
    Schedule {
        optimizer: OptimizerConfig::adam(0.005),
        ..Schedule::default()
    }
}

impl Default for DaSection {
    fn default() -> Self {
        DaSection {
            model: DaConfig::default(),
            schedule: adam_schedule(),
            min_count: 2,
        }
    }
}

impl Default for SrlSection {
    fn default() -> Self {
        SrlSection {
            model: SrlConfig::default(),
            schedule: adam_schedule(),
            min_count: 2,
        }
    }
}

fn check_schedule(name: &str, s: &Schedule) -> Result<()> {
    let lr = match s.optimizer {
        OptimizerConfig::Sgd { lr } | OptimizerConfig::Adam { lr, .. } => lr,
    };
    if !(lr > 0.0) || !lr.is_finite() {
        return Err(Error::Config(format!("{name}.schedule: learning rate must be positive")));
    }
    if s.batch_size == 0 {
        return Err(Error::Config(format!("{name}.schedule: batch_size must be positive")));
    }
    if !(s.clip_norm > 0.0) {
        return Err(Error::Config(format!("{name}.schedule: clip_norm must be positive")));
    }
    Ok(())
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.data.test_fraction) {
            return Err(Error::Config("data.test_fraction must lie in [0, 1)".into()));
        }
        self.generator.mix.validate().map_err(|e| Error::Config(format!("generator.mix: {e}")))?;
        if !(0.0..=1.0).contains(&self.generator.hold_noise) {
            return Err(Error::Config("generator.hold_noise must lie in [0, 1]".into()));
        }
        self.completion.model.validate()?;
        if self.completion.beam == 0 {
            return Err(Error::Config("completion.beam must be positive".into()));
        }
        self.da.model.validate()?;
        self.srl.model.validate()?;
        check_schedule("completion", &self.completion.schedule)?;
        check_schedule("da", &self.da.schedule)?;
        check_schedule("srl", &self.srl.schedule)?;
        self.selection.validate()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serialises to TOML")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn serialised_form_parses_back() {
        let mut c = RunConfig::default();
        c.seed = 99;
        c.da.schedule.epochs = 3;
        c.selection.tau = 0.8;
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(RunConfig::from_toml("seeds = 3").is_err());
        assert!(RunConfig::from_toml("[da.model]\nwidth = 3").is_err());
        assert!(RunConfig::from_toml("[data]\ntest_fraction = 1.5").is_err());
        assert!(RunConfig::from_toml("[generator.mix]\nhad_ellipsis = 0.9\nmodified_to_ellipsis = 0.9\nalready_complete = 0.0").is_err());
        assert!(RunConfig::from_toml("[srl.schedule]\nbatch_size = 0").is_err());
        let c = RunConfig::from_toml("seed = 4\n[completion.schedule.optimizer]\nkind = \"adam\"\nlr = 0.01").unwrap();
        assert_eq!(c.completion.schedule.optimizer, OptimizerConfig::adam(0.01));
    }
}

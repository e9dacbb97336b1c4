//! Pipeline configuration: a JSON file whose fields all have defaults.

use std::path::{Path, PathBuf};

use pixaug_core::classifier::ClassifierConfig;
use pixaug_core::data::Label;
use pixaug_core::gan::GanConfig;
use pixaug_core::rng::derive_seed;
use pixaug_core::stats::KsMethod;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// Optional scene CSV classified with the final model.
    pub scene: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub gan: GanConfig,
    pub classifier: ClassifierConfig,
    pub generated_sets: usize,
    pub set_size: usize,
    pub alpha: f64,
    pub permutations: usize,
    pub ks_method: KsMethod,
    pub master_seed: u64,
    pub threads: usize,
    pub threshold: f64,
    /// Class treated as positive in the accuracy table.
    pub positive_label: Label,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            train: None,
            test: None,
            scene: None,
            out_dir: PathBuf::from("out"),
            gan: GanConfig::default(),
            classifier: ClassifierConfig::default(),
            generated_sets: 3,
            set_size: 100,
            alpha: 0.05,
            permutations: 999,
            ks_method: KsMethod::Asymptotic,
            master_seed: 0,
            threads: 1,
            threshold: 0.5,
            positive_label: Label::NonBuiltUp,
        }
    }
}

/// Stage seeds, all derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub gan: u64,
    pub generate: u64,
    pub validate: u64,
    pub classifier: u64,
}

impl Seeds {
    pub fn from_master(master: u64) -> Self {
        Seeds {
            gan: derive_seed(master, "gan"),
            generate: derive_seed(master, "generate"),
            validate: derive_seed(master, "validate"),
            classifier: derive_seed(master, "classifier"),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        fsutil::read_json(path).map_err(|e| match e {
            Error::Format { path, message } => Error::Argument(format!("{path}: {message}")),
            e => e,
        })
    }

    pub fn seeds(&self) -> Seeds {
        Seeds::from_master(self.master_seed)
    }

    pub fn validate(&self) -> Result<()> {
        let arg = |m: String| Err(Error::Argument(m));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return arg(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.set_size == 0 {
            return arg("set_size must be >= 1".to_string());
        }
        if self.threads == 0 {
            return arg("threads must be >= 1".to_string());
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return arg(format!("threshold must lie in (0, 1), got {}", self.threshold));
        }
        if self.permutations < pixaug_core::stats::MIN_PERMUTATIONS {
            return arg(format!(
                "permutations must be >= {}, got {}",
                pixaug_core::stats::MIN_PERMUTATIONS,
                self.permutations
            ));
        }
        self.gan.validate(pixaug_core::BANDS)?;
        self.classifier.validate()?;
        Ok(())
    }
}

//! JSON checkpoints for trained networks.
//!
//! serde_json prints doubles in shortest round-trip form, so every finite
//! parameter reloads bit-exactly.

use std::path::Path;

use pixaug_core::data::Normalization;
use pixaug_core::gan::GanModel;
use pixaug_core::nn::{LayerSpec, Mlp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;

pub const CLASSIFIER_SCHEMA: &str = "pixaug.classifier.v1";
pub const GAN_SCHEMA: &str = "pixaug.gan.v1";

/// One network's architecture and parameters; weights are row-major
/// `output x input` per layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layer_specs: Vec<LayerSpec>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Network {
    pub fn from_mlp(net: &Mlp) -> Self {
        Network {
            layer_specs: net.specs(),
            weights: net.layers().iter().map(|l| l.weights().to_vec()).collect(),
            biases: net.layers().iter().map(|l| l.biases().to_vec()).collect(),
        }
    }

    pub fn to_mlp(&self) -> pixaug_core::Result<Mlp> {
        Mlp::from_parts(&self.layer_specs, self.weights.clone(), self.biases.clone())
    }
}

/// Grid-search outcome and training-set composition stored alongside a
/// classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub hidden_units: usize,
    pub lambda: f64,
    pub cv_accuracy: f64,
    /// Number of generated sets added to the training data.
    pub k: usize,
    pub builtup_original: usize,
    pub builtup_generated: usize,
    pub nonbuiltup: usize,
}

impl Selection {
    pub fn from_record(r: &crate::report::AccuracyRecord) -> Self {
        Selection {
            hidden_units: r.chosen_hidden_units,
            lambda: r.chosen_lambda,
            cv_accuracy: r.cv_accuracy,
            k: r.k,
            builtup_original: r.builtup_original,
            builtup_generated: r.builtup_generated,
            nonbuiltup: r.nonbuiltup,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierCheckpoint {
    pub schema_version: String,
    #[serde(flatten)]
    pub network: Network,
    pub normalization: Normalization,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<Selection>,
}

impl ClassifierCheckpoint {
    pub fn new(model: &Mlp, normalization: &Normalization, selection: Option<Selection>) -> Self {
        ClassifierCheckpoint {
            schema_version: CLASSIFIER_SCHEMA.to_string(),
            network: Network::from_mlp(model),
            normalization: normalization.clone(),
            selection,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fsutil::write_json(path, self)
    }

    /// Loads and rebuilds the model, rejecting any shape or schema mismatch.
    pub fn load(path: &Path) -> Result<(Self, Mlp)> {
        let ck: ClassifierCheckpoint = fsutil::read_json(path)?;
        if ck.schema_version != CLASSIFIER_SCHEMA {
            return Err(Error::format(
                path,
                format!("expected schema {CLASSIFIER_SCHEMA}, found {}", ck.schema_version),
            ));
        }
        let net = ck.network.to_mlp().map_err(|e| Error::format(path, e.to_string()))?;
        if net.input_width() != ck.normalization.dim() || net.output_width() != 1 {
            return Err(Error::format(path, "network does not match the normalization block"));
        }
        Ok((ck, net))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanCheckpoint {
    pub schema_version: String,
    pub generator: Network,
    pub discriminator: Network,
    pub normalization: Normalization,
}

impl GanCheckpoint {
    pub fn new(model: &GanModel) -> Self {
        GanCheckpoint {
            schema_version: GAN_SCHEMA.to_string(),
            generator: Network::from_mlp(&model.generator),
            discriminator: Network::from_mlp(&model.discriminator),
            normalization: model.normalization.clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fsutil::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<GanModel> {
        let ck: GanCheckpoint = fsutil::read_json(path)?;
        if ck.schema_version != GAN_SCHEMA {
            return Err(Error::format(
                path,
                format!("expected schema {GAN_SCHEMA}, found {}", ck.schema_version),
            ));
        }
        let bad = |e: pixaug_core::Error| Error::format(path, e.to_string());
        let model = GanModel {
            generator: ck.generator.to_mlp().map_err(bad)?,
            discriminator: ck.discriminator.to_mlp().map_err(bad)?,
            normalization: ck.normalization,
        };
        let dim = model.normalization.dim();
        if model.generator.output_width() != dim || model.discriminator.input_width() != dim {
            return Err(Error::format(path, "networks do not match the normalization block"));
        }
        Ok(model)
    }
}

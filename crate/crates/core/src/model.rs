//! Versioned on-disk form of a trained network.
//!
//! Stored as JSON. Weights are written in canonical order with shortest
//! round-trip decimal formatting, so load → save → load is bit-identical.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{apply_transforms, ColumnTransform, Dataset};
use crate::error::{Error, Result};
use crate::forward::{classify, Classification};
use crate::topology::{Topology, TopologySpec};

pub const FORMAT_NAME: &str = "scgnet-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub error: f64,
    pub reasonable: bool,
    pub cold_starts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub topology: TopologySpec,
    /// Preprocessing replayed on raw inputs before classification.
    #[serde(default)]
    pub transforms: Vec<ColumnTransform>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainingMeta>,
}

impl ModelFile {
    pub fn new(topology: &Topology, weights: Vec<f64>, transforms: Vec<ColumnTransform>) -> Result<Self> {
        let model = Self {
            format: FORMAT_NAME.to_string(),
            version: FORMAT_VERSION,
            topology: topology.spec(),
            transforms,
            weights,
            training: None,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_training(mut self, meta: TrainingMeta) -> Self {
        self.training = Some(meta);
        self
    }

    pub fn topology(&self) -> Result<Topology> {
        Topology::try_from(self.topology)
    }

    fn validate(&self) -> Result<()> {
        if self.format != FORMAT_NAME {
            return Err(Error::Model(format!("unknown format {:?}", self.format)));
        }
        if self.version != FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported version {} (expected {FORMAT_VERSION})",
                self.version
            )));
        }
        let topology = self.topology()?;
        if self.weights.len() != topology.weight_count() {
            return Err(Error::Model(format!(
                "{} weights stored, topology needs {}",
                self.weights.len(),
                topology.weight_count()
            )));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("stored weights"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: ModelFile = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Applies the stored transforms to raw data and checks its shape.
    pub fn prepare(&self, raw: &Dataset) -> Result<Dataset> {
        let topology = self.topology()?;
        if raw.d() != topology.d() {
            return Err(Error::Dimension {
                what: "input dimension",
                expected: topology.d(),
                actual: raw.d(),
            });
        }
        let data = apply_transforms(raw, &self.transforms)?;
        data.check_topology(&topology)?;
        Ok(data)
    }

    /// Classifies every pattern of raw (untransformed) data.
    pub fn classify_raw(&self, raw: &Dataset) -> Result<Vec<Classification>> {
        let topology = self.topology()?;
        let data = self.prepare(raw)?;
        data.patterns()
            .iter()
            .map(|p| classify(&topology, &self.weights, &p.features))
            .collect()
    }
}

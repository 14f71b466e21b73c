use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelConfig, ModelError, Params, Result};
use crate::autodiff::Tensor;
use crate::graph::SamplerConfig;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Self-describing JSON snapshot of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub model: ModelConfig,
    pub sampler: SamplerConfig,
    /// Metapath names in parameter order.
    pub metapaths: Vec<String>,
    /// Curvature per metapath at save time, for reading only.
    pub curvatures: Vec<f64>,
    pub params: Params<Tensor>,
}

impl Checkpoint {
    pub fn new(model: ModelConfig, sampler: SamplerConfig, metapaths: Vec<String>, params: Params<Tensor>) -> Self {
        let curvatures = params.curvatures(&model);
        Self {
            version: CHECKPOINT_VERSION,
            model,
            sampler,
            metapaths,
            curvatures,
            params,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serialisation cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text).map_err(|e| ModelError::Config(format!("checkpoint: {e}")))?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(ModelError::Config(format!(
                "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
                ck.version
            )));
        }
        ck.model.validate()?;
        Ok(ck)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ModelError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

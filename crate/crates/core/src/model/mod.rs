//! The multi-hyperbolic heterogeneous graph attention network.
//!
//! Each metapath gets its own Poincaré ball with a learnable curvature.
//! Instances are encoded and attended inside that ball, the per-metapath
//! node embeddings are mapped into a shared flat space through the origin
//! tangent space, and a second attention mixes them into the node
//! embedding `z_v`.

mod checkpoint;
mod forward;
pub mod layers;
mod params;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use forward::{
    forward, forward_trace, prepare_batch, ForwardOutput, ForwardTrace, GroupOutput, GroupTrace, HeadOutput,
    MetapathInput, MetapathOutput, MetapathTrace, PreparedBatch, TypeGroup,
};
pub use layers::Geometry;
pub use params::{curvature_from_theta, theta_for_curvature, HeadParams, MetapathParams, Params};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::AutodiffError;
use crate::geometry::Activation;
use crate::graph::GraphError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("model config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Architecture variants compared in the ablation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// One ball per metapath.
    Full,
    /// Instance features concatenated (zero-padded) instead of averaged.
    Concat,
    /// Every hyperbolic operation replaced by its Euclidean counterpart.
    Euclid,
    /// One curvature shared by all metapaths.
    Single,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Full, Variant::Concat, Variant::Euclid, Variant::Single];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "FULL",
            Variant::Concat => "CONCAT",
            Variant::Euclid => "EUCLID",
            Variant::Single => "SINGLE",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(Variant::Full),
            "concat" => Ok(Variant::Concat),
            "euclid" => Ok(Variant::Euclid),
            "single" => Ok(Variant::Single),
            _ => Err(format!("unknown variant {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Node feature width `n`.
    pub input_dim: usize,
    /// Instance ball dimension `d`, split evenly across heads.
    pub hidden_dim: usize,
    /// Width of the metapath-attention projection `d'`.
    pub semantic_dim: usize,
    /// Output width `d_o` (number of classes); unused for link prediction.
    pub output_dim: usize,
    pub heads: usize,
    /// Maximum metapath length `l`; also the padding width for `Concat`.
    pub max_len: usize,
    pub variant: Variant,
    pub activation: Activation,
    /// Apply the activation after the Möbius bias instead of before it.
    pub activation_last: bool,
    /// Curvature is `softplus(θ) + curvature_floor`.
    pub curvature_floor: f64,
    pub initial_curvature: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_dim: 16,
            hidden_dim: 16,
            semantic_dim: 16,
            output_dim: 3,
            heads: 2,
            max_len: 4,
            variant: Variant::Full,
            activation: Activation::LeakyRelu,
            activation_last: false,
            curvature_floor: 0.1,
            initial_curvature: 1.0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(ModelError::Config(m));
        if self.heads == 0 {
            return err("heads must be at least 1".into());
        }
        for (name, v) in [
            ("input_dim", self.input_dim),
            ("hidden_dim", self.hidden_dim),
            ("semantic_dim", self.semantic_dim),
            ("output_dim", self.output_dim),
            ("max_len", self.max_len),
        ] {
            if v == 0 {
                return err(format!("{name} must be at least 1"));
            }
        }
        if self.hidden_dim % self.heads != 0 {
            return err(format!(
                "hidden_dim {} is not divisible by heads {}",
                self.hidden_dim, self.heads
            ));
        }
        if !(self.curvature_floor >= 0.0) || !(self.initial_curvature > self.curvature_floor) {
            return err("initial_curvature must exceed curvature_floor >= 0".into());
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.hidden_dim / self.heads
    }

    /// Width of the per-instance Euclidean feature fed to the encoder.
    pub fn instance_width(&self) -> usize {
        match self.variant {
            Variant::Concat => self.max_len * self.input_dim,
            _ => self.input_dim,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(ModelConfig::default().validate().is_ok());
        let bad = ModelConfig {
            hidden_dim: 15,
            ..ModelConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ModelConfig {
            heads: 0,
            ..ModelConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ModelConfig {
            curvature_floor: -0.1,
            ..ModelConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn variant_parsing() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("hyper".parse::<Variant>().is_err());
    }
}

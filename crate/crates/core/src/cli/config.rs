use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CliError;
use crate::graph::{SamplerConfig, SyntheticSpec};
use crate::model::{ModelConfig, Variant};
use crate::train::TrainConfig;

/// Bumped whenever an output format changes.
pub const ARTIFACT_VERSION: u32 = 1;

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationConfig {
    /// Seeds used are `train.seed + i` for `i < runs`.
    pub runs: usize,
    pub variants: Vec<Variant>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            runs: 5,
            variants: Variant::ALL.to_vec(),
        }
    }
}

/// Everything a command reads from its config file. `train.seed` is the
/// root seed of a run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub sampler: SamplerConfig,
    pub train: TrainConfig,
    pub ablation: AblationConfig,
    /// Dataset generated when a command is given no `--data` directory.
    pub synthetic: SyntheticSpec,
}

impl RunConfig {
    /// Reads a config file or a manifest written by an earlier run.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CliError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| e.to_string())?;
        if table.contains_key("artifact_version") {
            let m: RunManifest = toml::from_str(text).map_err(|e| e.to_string())?;
            if m.artifact_version != ARTIFACT_VERSION {
                return Err(format!(
                    "manifest artifact_version {} is not supported (expected {ARTIFACT_VERSION})",
                    m.artifact_version
                ));
            }
            return Ok(m.config);
        }
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialisation cannot fail")
    }
}

/// Written next to every output; loading it as a config reruns the command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub artifact_version: u32,
    pub command: String,
    pub seed: u64,
    pub threads: usize,
    /// Dataset directory as given, or `synthetic`.
    pub dataset: String,
    /// SHA-256 over the dataset files, or over the synthetic spec.
    pub dataset_fingerprint: String,
    pub config: RunConfig,
}

impl RunManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serialisation cannot fail")
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        super::write_file(&dir.join(MANIFEST_FILE), &self.to_toml())
    }
}

/// Hash of every regular file in `dir` except a manifest, in file-name
/// order, each entry framed by its name and length.
pub fn fingerprint_dir(dir: &Path) -> Result<String, CliError> {
    let read_err = |e: std::io::Error| CliError::Data(format!("{}: {e}", dir.display()));
    let mut files: Vec<_> = fs::read_dir(dir)
        .map_err(read_err)?
        .collect::<Result<Vec<_>, _>>()
        .map_err(read_err)?
        .into_iter()
        .filter(|e| e.path().is_file() && e.file_name() != MANIFEST_FILE)
        .map(|e| e.path())
        .collect();
    files.sort();
    let mut h = Sha256::new();
    for f in files {
        let bytes = fs::read(&f).map_err(read_err)?;
        let name = f
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        h.update((name.len() as u64).to_le_bytes());
        h.update(name.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}

pub fn fingerprint_spec(spec: &SyntheticSpec) -> String {
    let text = toml::to_string(spec).expect("spec serialisation cannot fail");
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("[model]\nhiden_dim = 4\n").is_err());
        assert!(RunConfig::parse("[trian]\n").is_err());
    }

    #[test]
    fn manifest_is_accepted_as_config() {
        let mut config = RunConfig::default();
        config.train.seed = 9;
        config.model.variant = Variant::Single;
        let m = RunManifest {
            artifact_version: ARTIFACT_VERSION,
            command: "train".into(),
            seed: 9,
            threads: 1,
            dataset: "synthetic".into(),
            dataset_fingerprint: fingerprint_spec(&config.synthetic),
            config: config.clone(),
        };
        assert_eq!(RunConfig::parse(&m.to_toml()).unwrap(), config);
        let newer = m.to_toml().replace("artifact_version = 1", "artifact_version = 99");
        assert!(RunConfig::parse(&newer).is_err());
    }

    #[test]
    fn partial_sections_keep_defaults() {
        let c = RunConfig::parse("[train]\nepochs = 3\n").unwrap();
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.train.learning_rate, TrainConfig::default().learning_rate);
        assert_eq!(c.model, ModelConfig::default());
    }
}

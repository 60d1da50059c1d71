use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluator::{BlobsConfig, TrainerConfig};
use crate::merge::TiePolicy;
use crate::moea::MoeaConfig;

/// Environment variable that overrides `paths.out_dir`.
pub const OUT_DIR_ENV: &str = "WEIGHTSHARE_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub out_dir: PathBuf,
    /// Directory holding `train`, `validation` and `test` datasets
    /// (`.wsds` or `.json`). When unset, `[blobs]` generates them.
    pub data_dir: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            data_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Flags {
    pub skip_merge: bool,
    pub skip_huffman: bool,
    pub random_ub_k: usize,
    pub tie_policy: TiePolicy,
}

impl Default for Flags {
    fn default() -> Self {
        Self {
            skip_merge: false,
            skip_huffman: false,
            random_ub_k: 1024,
            tie_policy: TiePolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default)]
    pub paths: Paths,
    /// Synthetic data generator, used when `paths.data_dir` is unset.
    #[serde(default)]
    pub blobs: Option<BlobsConfig>,
    #[serde(default)]
    pub trainer: TrainerConfig,
    #[serde(default)]
    pub moea: MoeaConfig,
    #[serde(default)]
    pub flags: Flags,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            paths: Paths::default(),
            blobs: Some(BlobsConfig::default()),
            trainer: TrainerConfig::default(),
            moea: MoeaConfig::default(),
            flags: Flags::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidConfig(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Sets every seed (data, trainer, search) to `seed`.
    pub fn override_seed(&mut self, seed: u64) {
        self.trainer.seed = seed;
        self.moea.seed = seed;
        if let Some(b) = &mut self.blobs {
            b.seed = seed;
        }
    }

    /// `OUT_DIR_ENV` replaces the configured output directory when set.
    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()) {
            self.paths.out_dir = PathBuf::from(dir);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths.data_dir.is_none() && self.blobs.is_none() {
            return Err(Error::InvalidConfig(
                "no dataset: set paths.data_dir or add a [blobs] generator block".into(),
            ));
        }
        if let Some(dir) = &self.paths.data_dir {
            if !dir.is_dir() {
                return Err(Error::InvalidConfig(format!(
                    "data_dir {} does not exist",
                    dir.display()
                )));
            }
        }
        self.moea.validate()?;
        if self.trainer.arch.len() < 2 {
            return Err(Error::InvalidConfig(
                "trainer.arch needs at least two dims".into(),
            ));
        }
        if self.flags.random_ub_k < 2 {
            return Err(Error::InvalidConfig(
                "random_ub_k must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

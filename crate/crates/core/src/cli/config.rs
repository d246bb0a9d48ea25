use std::path::{Path, PathBuf};

use super::commands::{MACRO_FILE, PRICES_FILE};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{AugmentPolicy, PipelineOptions, SplitRatios, SynthConfig};
use crate::error::{Error, Result};
use crate::model::{validate_tasks, ExtractorConfig, TaskSpec};
use crate::train::TrainConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Price CSV; defaults to `prices.csv` in the output directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prices: Option<PathBuf>,
    /// Macro CSV; defaults to `macro.csv` in the output directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub macros: Option<PathBuf>,
    /// Tickers to pool; empty means the first ticker in the price file.
    pub tickers: Vec<String>,
    pub window: usize,
    pub stride: usize,
    pub horizon: usize,
    pub split: SplitRatios,
}

impl Default for DataConfig {
    fn default() -> Self {
        let p = PipelineOptions::default();
        DataConfig {
            prices: None,
            macros: None,
            tickers: p.tickers,
            window: p.window,
            stride: p.stride,
            horizon: p.horizon,
            split: p.split,
        }
    }
}

impl DataConfig {
    pub fn pipeline(&self) -> PipelineOptions {
        PipelineOptions {
            tickers: self.tickers.clone(),
            window: self.window,
            stride: self.stride,
            horizon: self.horizon,
            split: self.split,
        }
    }
}

/// Everything a run needs. Every default is written out when the config is
/// resolved, so the content hash covers it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Output directory; not part of the content hash.
    pub out_dir: PathBuf,
    pub data: DataConfig,
    pub synth: SynthConfig,
    pub model: ExtractorConfig,
    pub tasks: Vec<TaskSpec>,
    pub train: TrainConfig,
    pub augment: AugmentPolicy,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            out_dir: PathBuf::from("out"),
            data: DataConfig::default(),
            synth: SynthConfig::default(),
            model: ExtractorConfig::default(),
            tasks: vec![
                TaskSpec::classification("direction", 2, 0.5),
                TaskSpec::regression("log_return", 0.5),
            ],
            train: TrainConfig::default(),
            augment: AugmentPolicy::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid("config", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Invalid { detail, .. } => {
                Error::invalid(format!("config {}", path.display()), detail)
            }
            other => other,
        })
    }

    pub fn prices_path(&self) -> PathBuf {
        self.data
            .prices
            .clone()
            .unwrap_or_else(|| self.out_dir.join(PRICES_FILE))
    }

    pub fn macros_path(&self) -> PathBuf {
        self.data
            .macros
            .clone()
            .unwrap_or_else(|| self.out_dir.join(MACRO_FILE))
    }

    /// The fully resolved config as TOML.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }

    /// Checks every section, including cross-section constraints, before any work starts.
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        validate_tasks(&self.tasks)?;
        self.train.validate()?;
        let alphas: Vec<f64> = match &self.train.alphas {
            Some(a) => a.clone(),
            None => self.tasks.iter().map(|t| t.alpha).collect(),
        };
        if alphas.len() != self.tasks.len() {
            return Err(Error::invalid(
                "train.alphas",
                format!("{} weights for {} tasks", alphas.len(), self.tasks.len()),
            ));
        }
        crate::model::validate_alphas(&alphas)?;
        self.augment.validate()?;
        self.data.pipeline().validate()?;
        self.model.output_len(self.data.window)?;
        self.synth.validate()?;
        Ok(())
    }

    /// SHA-256 over the canonical JSON form (sorted keys) of the config
    /// without `out_dir`.
    pub fn content_hash(&self) -> Result<String> {
        let mut v = serde_json::to_value(self).map_err(|e| Error::Serde(e.to_string()))?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("out_dir");
        }
        let canonical = serde_json::to_vec(&v).map_err(|e| Error::Serde(e.to_string()))?;
        let digest = Sha256::digest(&canonical);
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

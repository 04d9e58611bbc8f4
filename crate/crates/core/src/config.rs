//! Run configuration: TOML file plus programmatic defaults.
//!
//! Every command echoes its effective config into the output directory so a
//! run can be reproduced from the echo alone.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluator::ChannelWeights;
use crate::graph::{read_to_string, write_string};
use crate::reasoner::Lexicon;

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct PathsConfig {
    pub nodes: PathBuf,
    pub edges: PathBuf,
    pub corpus: Option<PathBuf>,
    pub kb: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Defaults to `<output_dir>/model.evgnn`.
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Layer count; unset means the graph diameter at load, capped at 4.
    pub layers: Option<usize>,
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            layers: None,
            hidden_dim: 8,
            learning_rate: 0.1,
            epochs: 200,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainerConfig {
    pub sparsity: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub hidden: usize,
    pub top_k: usize,
    pub enforce_connectivity: bool,
}

impl Default for ExplainerConfig {
    fn default() -> Self {
        Self {
            sparsity: 0.1,
            epochs: 300,
            learning_rate: 0.5,
            hidden: 16,
            top_k: 5,
            enforce_connectivity: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct VerdictConfig {
    pub weak_below: f64,
    pub strong_at: f64,
}

impl Default for VerdictConfig {
    fn default() -> Self {
        Self {
            weak_below: 0.33,
            strong_at: 0.66,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    /// Cluster count; unset means ceil(sqrt(node count)).
    pub k: Option<usize>,
    pub top_m: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self { k: None, top_m: 5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PathChannelConfig {
    pub max_len: usize,
    pub limit: usize,
    pub exclude_direct: bool,
}

impl Default for PathChannelConfig {
    fn default() -> Self {
        Self {
            max_len: 4,
            limit: 10,
            exclude_direct: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TextChannelConfig {
    pub top_n: usize,
}

impl Default for TextChannelConfig {
    fn default() -> Self {
        Self { top_n: 5 }
    }
}

fn default_jobs() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub paths: PathsConfig,
    pub model: ModelConfig,
    pub explainer: ExplainerConfig,
    pub channels: ChannelWeights,
    pub verdict: VerdictConfig,
    pub cluster: ClusterConfig,
    pub path_channel: PathChannelConfig,
    pub text_channel: TextChannelConfig,
    pub lexicon: Lexicon,
    /// Worker cap for batch evaluation; 1 keeps runs single-threaded.
    #[serde(default = "default_jobs")]
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            paths: PathsConfig::default(),
            model: ModelConfig::default(),
            explainer: ExplainerConfig::default(),
            channels: ChannelWeights::default(),
            verdict: VerdictConfig::default(),
            cluster: ClusterConfig::default(),
            path_channel: PathChannelConfig::default(),
            text_channel: TextChannelConfig::default(),
            lexicon: Lexicon::default(),
            jobs: default_jobs(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let raw = read_to_string(path)?;
        let mut cfg: RunConfig = toml::from_str(&raw).map_err(|e| Error::Config {
            message: format!("{}: {e}", path.display()),
        })?;
        if cfg.jobs == 0 {
            cfg.jobs = 1;
        }
        Ok(cfg)
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.paths
            .checkpoint
            .clone()
            .unwrap_or_else(|| self.paths.output_dir.join("model.evgnn"))
    }

    /// Write the effective config into the output directory.
    pub fn echo(&self, output_dir: &Path) -> Result<PathBuf> {
        let rendered = toml::to_string_pretty(self).map_err(|e| Error::Config {
            message: format!("cannot serialize config: {e}"),
        })?;
        let path = output_dir.join("effective_config.toml");
        write_string(&path, &rendered)?;
        Ok(path)
    }

    pub fn validate(&self) -> Result<()> {
        let weights = [
            self.channels.cluster_overlap,
            self.channels.path,
            self.channels.text,
            self.channels.reasoner,
        ];
        if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::Config {
                message: "channel weights must be non-negative and finite".to_string(),
            });
        }
        if weights.iter().all(|w| *w == 0.0) {
            return Err(Error::AllChannelsDisabled);
        }
        if !(0.0..=1.0).contains(&self.verdict.weak_below)
            || !(0.0..=1.0).contains(&self.verdict.strong_at)
            || self.verdict.weak_below > self.verdict.strong_at
        {
            return Err(Error::Config {
                message: "verdict thresholds must satisfy 0 <= weak_below <= strong_at <= 1"
                    .to_string(),
            });
        }
        Ok(())
    }
}

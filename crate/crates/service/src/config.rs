use std::path::{Path, PathBuf};

use lpchat_core::ir::EquivalenceMode;
use lpchat_gateway::BackendConfig;
use lpchat_pipeline::PipelineConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Service settings, read from TOML. Unknown keys are rejected. The
/// backend API key is never part of the file; `backend.api_key_env` names
/// the environment variable holding it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_listen")]
    pub listen: String,
    pub data_dir: PathBuf,
    pub backend: BackendConfig,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    #[serde(default)]
    pub equivalence_mode: EquivalenceMode,
    #[serde(default = "default_max_upload")]
    pub max_upload_bytes: usize,
    /// Seconds a request waits for its run before answering `running`.
    #[serde(default = "default_budget")]
    pub reply_budget_secs: f64,
}

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}

fn default_max_upload() -> usize {
    1 << 20
}

fn default_budget() -> f64 {
    30.0
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ServiceConfig = toml::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Relative paths in the file are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = ServiceConfig::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.data_dir.is_relative() {
            cfg.data_dir = base.join(&cfg.data_dir);
        }
        if let Some(f) = cfg.backend.fixtures.as_mut().filter(|f| f.is_relative()) {
            *f = base.join(&*f);
        }
        Ok(cfg)
    }

    fn check(&self) -> Result<(), ConfigError> {
        if self.reply_budget_secs.is_nan() || self.reply_budget_secs <= 0.0 {
            return Err(ConfigError::Invalid("reply_budget_secs must be positive".into()));
        }
        if self.max_upload_bytes == 0 {
            return Err(ConfigError::Invalid("max_upload_bytes must be positive".into()));
        }
        if !(1..=lpchat_pipeline::prompts::CASES.len()).contains(&self.pipeline.shots) {
            return Err(ConfigError::Invalid(format!(
                "pipeline.shots must be between 1 and {}",
                lpchat_pipeline::prompts::CASES.len()
            )));
        }
        Ok(())
    }
}

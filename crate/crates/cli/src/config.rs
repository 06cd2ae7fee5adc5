//! Layered run configuration. Precedence, lowest to highest: config file,
//! command-line flags, environment variables.
//!
//! Environment overrides: `BIAS_REFINERY_API_KEY`,
//! `BIAS_REFINERY_ENDPOINT_URL`, `BIAS_REFINERY_MODEL_NAME`.

use std::path::{Path, PathBuf};

use bias_refinery_core::llm::{LlmConfig, DEFAULT_MODEL_NAME};
use serde::Deserialize;

use crate::errors::CliError;

pub const ENDPOINT_ENV: &str = "BIAS_REFINERY_ENDPOINT_URL";
pub const MODEL_ENV: &str = "BIAS_REFINERY_MODEL_NAME";

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub paths: PathsSection,
    #[serde(default)]
    pub remote: RemoteSection,
    #[serde(default)]
    pub filter: FilterSection,
    #[serde(default)]
    pub eval: EvalSection,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub corpus: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteSection {
    pub endpoint_url: Option<String>,
    pub model_name: Option<String>,
    pub max_attempts: Option<u32>,
    pub base_delay_ms: Option<u64>,
    pub max_concurrency: Option<usize>,
    pub timeout_secs: Option<u64>,
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub threshold: Option<f64>,
    pub keep_any_related: Option<bool>,
    pub keep_non_wsd_matches: Option<bool>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub ci_method: Option<String>,
    pub min_df: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&raw)
            .map_err(|e| CliError::config(format!("invalid config {}: {e}", path.display())))
    }
}

/// Pick the effective value: flag beats file, fallback otherwise.
pub fn resolve<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn resolve_required<T: Clone>(
    flag: Option<T>,
    file: Option<T>,
    what: &str,
) -> Result<T, CliError> {
    flag.or(file)
        .ok_or_else(|| CliError::config(format!("missing required setting: {what}")))
}

/// Assemble the remote-client settings. Environment variables win over
/// flags, flags over the config file. The API key comes from the
/// environment or the config file only, never a flag.
pub fn resolve_remote(
    file: &RemoteSection,
    endpoint_flag: Option<String>,
    model_flag: Option<String>,
    cache_dir_flag: Option<PathBuf>,
) -> Result<LlmConfig, CliError> {
    let mut endpoint = endpoint_flag
        .or_else(|| file.endpoint_url.clone())
        .unwrap_or_default();
    if let Ok(env_endpoint) = std::env::var(ENDPOINT_ENV) {
        if !env_endpoint.is_empty() {
            endpoint = env_endpoint;
        }
    }
    let mut model = model_flag
        .or_else(|| file.model_name.clone())
        .unwrap_or_else(|| DEFAULT_MODEL_NAME.to_string());
    if let Ok(env_model) = std::env::var(MODEL_ENV) {
        if !env_model.is_empty() {
            model = env_model;
        }
    }
    if endpoint.is_empty() {
        return Err(CliError::config(format!(
            "remote backend needs an endpoint URL (flag --endpoint-url, config [remote].endpoint_url, or {ENDPOINT_ENV})"
        )));
    }
    let config = LlmConfig {
        endpoint_url: endpoint,
        model_name: model,
        api_key: None,
        max_attempts: file.max_attempts.unwrap_or(4),
        base_delay_ms: file.base_delay_ms.unwrap_or(500),
        max_concurrency: file.max_concurrency.unwrap_or(4),
        timeout_secs: file.timeout_secs.unwrap_or(60),
        cache_dir: cache_dir_flag.or_else(|| file.cache_dir.clone()),
    }
    .resolve_api_key();
    if config.api_key.is_none() {
        return Err(CliError::config(format!(
            "missing API key: set the {} environment variable",
            bias_refinery_core::llm::API_KEY_ENV
        )));
    }
    Ok(config)
}

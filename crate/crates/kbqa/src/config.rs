//! Application configuration: endpoints, model settings, budgets.

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::agent::AgentConfig;
use crate::kb::ClientConfig;

/// Which completion backend to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Openai,
    Replay,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmSettings {
    pub provider: ProviderKind,
    pub model: String,
    /// Chat completions endpoint URL.
    pub endpoint: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    /// Cap on model calls per process; `0` means unlimited.
    pub call_budget: u32,
    pub request_timeout_secs: u64,
    pub max_retries: u32,
    /// Record transcripts here (live mode) or read them (replay mode).
    pub transcript_dir: Option<PathBuf>,
}

impl Default for LlmSettings {
    fn default() -> Self {
        Self {
            provider: ProviderKind::Openai,
            model: "gpt-4o".to_string(),
            endpoint: "https://api.openai.com/v1/chat/completions".to_string(),
            api_key_env: "OPENAI_API_KEY".to_string(),
            call_budget: 0,
            request_timeout_secs: 120,
            max_retries: 3,
            transcript_dir: None,
        }
    }
}

impl LlmSettings {
    pub fn budget(&self) -> Option<u32> {
        (self.call_budget > 0).then_some(self.call_budget)
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.request_timeout_secs)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchSettings {
    pub parallelism: usize,
    /// Where gold results are cached.
    pub gold_cache_dir: Option<PathBuf>,
}

impl Default for BenchSettings {
    fn default() -> Self {
        Self { parallelism: 4, gold_cache_dir: None }
    }
}

/// Top-level configuration, loadable from a TOML file. Every section is
/// optional and falls back to defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AppConfig {
    pub kb: ClientConfig,
    pub llm: LlmSettings,
    pub agent: AgentConfig,
    pub bench: BenchSettings,
}

impl AppConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

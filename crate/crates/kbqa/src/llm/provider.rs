//! Chat-completion providers: a live OpenAI-compatible client plus
//! record/replay transcripts for deterministic offline runs.

use std::collections::VecDeque;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::SamplingParams;

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("provider credentials missing: set {0}")]
    MissingKey(String),
    #[error("provider request failed after {attempts} attempts: {message}")]
    Http { attempts: u32, message: String },
    #[error("provider returned an unusable response: {0}")]
    BadResponse(String),
    #[error("transcript exhausted: no recorded response for call #{call_index}")]
    ReplayExhausted { call_index: usize },
    #[error("replayed prompt mismatch at call #{call_index}: digest {got} != recorded {want}")]
    ReplayMismatch { call_index: usize, got: String, want: String },
    #[error("transcript io: {0}")]
    TranscriptIo(#[from] std::io::Error),
}

/// Anything that can turn a prompt into model text.
pub trait ChatProvider: Send + Sync {
    fn complete(&self, prompt: &str, sampling: &SamplingParams) -> Result<String, ProviderError>;
}

/// Digest identifying a request: prompt plus decoding settings.
pub fn request_digest(prompt: &str, sampling: &SamplingParams) -> String {
    let mut hasher = Sha256::new();
    hasher.update(prompt.as_bytes());
    hasher.update([0]);
    hasher.update(format!(
        "t={};p={};n={}",
        sampling.temperature, sampling.nucleus_p, sampling.max_output_tokens
    ));
    hex::encode(hasher.finalize())
}

/// One recorded call: request digest, raw response, wall-clock bounds.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct TranscriptRecord {
    pub digest: String,
    pub response: String,
    #[serde(default)]
    pub started_at_ms: u64,
    #[serde(default)]
    pub finished_at_ms: u64,
}

/// Live client for any OpenAI-compatible chat completions endpoint.
pub struct OpenAiProvider {
    http: reqwest::blocking::Client,
    endpoint: String,
    model: String,
    api_key: String,
    max_retries: u32,
}

impl OpenAiProvider {
    /// Reads the key from `key_env` (default `OPENAI_API_KEY`).
    pub fn new(
        endpoint: impl Into<String>,
        model: impl Into<String>,
        key_env: &str,
        timeout: Duration,
        max_retries: u32,
    ) -> Result<Self, ProviderError> {
        let api_key =
            std::env::var(key_env).map_err(|_| ProviderError::MissingKey(key_env.to_string()))?;
        let http = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ProviderError::Http { attempts: 0, message: e.to_string() })?;
        Ok(Self {
            http,
            endpoint: endpoint.into(),
            model: model.into(),
            api_key,
            max_retries,
        })
    }
}

impl ChatProvider for OpenAiProvider {
    fn complete(&self, prompt: &str, sampling: &SamplingParams) -> Result<String, ProviderError> {
        let body = serde_json::json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": sampling.temperature,
            "top_p": sampling.nucleus_p,
            "max_tokens": sampling.max_output_tokens,
        });
        let mut attempt = 0;
        loop {
            attempt += 1;
            let sent = self
                .http
                .post(&self.endpoint)
                .bearer_auth(&self.api_key)
                .json(&body)
                .send();
            let retriable_status =
                |code: u16| matches!(code, 429 | 500 | 502 | 503 | 504);
            match sent {
                Ok(response) if response.status().is_success() => {
                    let value: serde_json::Value = response
                        .json()
                        .map_err(|e| ProviderError::BadResponse(e.to_string()))?;
                    let content = value["choices"][0]["message"]["content"]
                        .as_str()
                        .ok_or_else(|| {
                            ProviderError::BadResponse("missing choices[0].message.content".into())
                        })?;
                    return Ok(content.to_string());
                }
                Ok(response) => {
                    let code = response.status().as_u16();
                    let message = response.text().unwrap_or_default();
                    if !retriable_status(code) || attempt > self.max_retries {
                        return Err(ProviderError::Http {
                            attempts: attempt,
                            message: format!("HTTP {code}: {message}"),
                        });
                    }
                }
                Err(e) => {
                    if attempt > self.max_retries {
                        return Err(ProviderError::Http {
                            attempts: attempt,
                            message: e.to_string(),
                        });
                    }
                }
            }
            std::thread::sleep(Duration::from_millis(200 * u64::from(attempt)));
        }
    }
}

/// Serves recorded responses in order. With digests present, each replayed
/// prompt must hash to the recorded digest, which proves the caller is
/// re-rendering byte-identical prompts.
pub struct ReplayProvider {
    records: Mutex<VecDeque<TranscriptRecord>>,
    calls: Mutex<usize>,
}

impl ReplayProvider {
    pub fn new(records: Vec<TranscriptRecord>) -> Self {
        Self { records: Mutex::new(records.into()), calls: Mutex::new(0) }
    }

    /// Scripted responses without digest checks; handy in tests.
    pub fn from_responses(responses: Vec<String>) -> Self {
        Self::new(
            responses
                .into_iter()
                .map(|response| TranscriptRecord {
                    digest: String::new(),
                    response,
                    started_at_ms: 0,
                    finished_at_ms: 0,
                })
                .collect(),
        )
    }

    /// Loads a JSONL transcript written by [`RecordingProvider`].
    pub fn from_file(path: &Path) -> Result<Self, ProviderError> {
        let text = std::fs::read_to_string(path)?;
        let mut records = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            records.push(
                serde_json::from_str(line)
                    .map_err(|e| ProviderError::BadResponse(format!("transcript line: {e}")))?,
            );
        }
        Ok(Self::new(records))
    }

    pub fn remaining(&self) -> usize {
        self.records.lock().expect("replay lock").len()
    }
}

impl ChatProvider for ReplayProvider {
    fn complete(&self, prompt: &str, sampling: &SamplingParams) -> Result<String, ProviderError> {
        let mut calls = self.calls.lock().expect("replay lock");
        let call_index = *calls;
        *calls += 1;
        let record = self
            .records
            .lock()
            .expect("replay lock")
            .pop_front()
            .ok_or(ProviderError::ReplayExhausted { call_index })?;
        if !record.digest.is_empty() {
            let got = request_digest(prompt, sampling);
            if got != record.digest {
                return Err(ProviderError::ReplayMismatch {
                    call_index,
                    got,
                    want: record.digest,
                });
            }
        }
        Ok(record.response)
    }
}

/// Wraps a live provider and appends one JSONL record per call.
pub struct RecordingProvider<P> {
    inner: P,
    path: PathBuf,
    file: Mutex<std::fs::File>,
}

impl<P: ChatProvider> RecordingProvider<P> {
    pub fn create(inner: P, path: impl Into<PathBuf>) -> Result<Self, ProviderError> {
        let path = path.into();
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let file = std::fs::File::create(&path)?;
        Ok(Self { inner, path, file: Mutex::new(file) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

impl<P: ChatProvider> ChatProvider for RecordingProvider<P> {
    fn complete(&self, prompt: &str, sampling: &SamplingParams) -> Result<String, ProviderError> {
        let started_at_ms = now_ms();
        let response = self.inner.complete(prompt, sampling)?;
        let record = TranscriptRecord {
            digest: request_digest(prompt, sampling),
            response: response.clone(),
            started_at_ms,
            finished_at_ms: now_ms(),
        };
        let mut file = self.file.lock().expect("transcript lock");
        writeln!(file, "{}", serde_json::to_string(&record).expect("record json"))?;
        file.flush()?;
        Ok(response)
    }
}

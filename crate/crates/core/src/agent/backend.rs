//! Model backends: a scripted mock, a replay of recorded completions, and a
//! live chat-completion endpoint.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use super::digest;

pub const ENDPOINT_VAR: &str = "MOCO_LLM_ENDPOINT";
pub const KEY_VAR: &str = "MOCO_LLM_KEY";
pub const MODEL_VAR: &str = "MOCO_LLM_MODEL";
const DEFAULT_MODEL: &str = "o4-mini";
const ATTEMPTS: u32 = 3;
const BACKOFF: Duration = Duration::from_millis(500);

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("backend unreachable after {attempts} attempts: {last}")]
    Unreachable { attempts: u32, last: String },
    #[error("backend rejected the request with status {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("malformed backend response: {0}")]
    Malformed(String),
    #[error("replay fixture exhausted after {0} completions")]
    Exhausted(usize),
    #[error("replay fixture {path}: {message}")]
    Fixture { path: String, message: String },
    #[error("writing request log: {0}")]
    Log(#[from] std::io::Error),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("completion contains no fenced code block")]
pub struct ExtractionError;

pub trait ModelBackend {
    fn complete(&mut self, prompt: &str) -> Result<String, BackendError>;
}

/// Returns scripted completions in order, wrapping around.
#[derive(Debug, Clone)]
pub struct MockBackend {
    responses: Vec<String>,
    next: usize,
}

impl MockBackend {
    pub fn new(responses: Vec<String>) -> Self {
        Self { responses, next: 0 }
    }
}

impl ModelBackend for MockBackend {
    fn complete(&mut self, _prompt: &str) -> Result<String, BackendError> {
        if self.responses.is_empty() {
            return Err(BackendError::Config("mock backend has no responses".into()));
        }
        let r = self.responses[self.next % self.responses.len()].clone();
        self.next += 1;
        Ok(r)
    }
}

/// One exchange in a request log or replay fixture.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Exchange {
    pub prompt_sha256: String,
    pub completion: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request: Option<serde_json::Value>,
}

/// Plays back recorded completions in order.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    exchanges: Vec<Exchange>,
    next: usize,
}

impl ReplayBackend {
    pub fn new(exchanges: Vec<Exchange>) -> Self {
        Self { exchanges, next: 0 }
    }

    /// Reads a JSON-lines fixture, one [`Exchange`] per line.
    pub fn from_file(path: &Path) -> Result<Self, BackendError> {
        let fixture = |message: String| BackendError::Fixture { path: path.display().to_string(), message };
        let text = fs::read_to_string(path).map_err(|e| fixture(e.to_string()))?;
        let exchanges = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| fixture(format!("line {}: {e}", i + 1))))
            .collect::<Result<Vec<Exchange>, _>>()?;
        Ok(Self::new(exchanges))
    }
}

impl ModelBackend for ReplayBackend {
    fn complete(&mut self, prompt: &str) -> Result<String, BackendError> {
        let e = self.exchanges.get(self.next).ok_or(BackendError::Exhausted(self.next))?;
        if e.prompt_sha256 != digest(prompt) {
            log::warn!("replay exchange {} was recorded for a different prompt", self.next);
        }
        self.next += 1;
        Ok(e.completion.clone())
    }
}

/// OpenAI-style chat-completion endpoint.
pub struct LiveBackend {
    endpoint: String,
    key: String,
    model: String,
    client: reqwest::blocking::Client,
    log: Option<PathBuf>,
}

impl LiveBackend {
    pub fn new(endpoint: String, key: String, model: String, log: Option<PathBuf>) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(600))
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(Self { endpoint, key, model, client, log })
    }

    /// Endpoint and key from `MOCO_LLM_ENDPOINT` and `MOCO_LLM_KEY`; the
    /// model name from `MOCO_LLM_MODEL` if set.
    pub fn from_env(log: Option<PathBuf>) -> Result<Self, BackendError> {
        let var = |name: &str| std::env::var(name).ok().filter(|v| !v.is_empty());
        let endpoint = var(ENDPOINT_VAR).ok_or_else(|| BackendError::Config(format!("{ENDPOINT_VAR} is not set")))?;
        let key = var(KEY_VAR).ok_or_else(|| BackendError::Config(format!("{KEY_VAR} is not set")))?;
        let model = var(MODEL_VAR).unwrap_or_else(|| DEFAULT_MODEL.to_string());
        Self::new(endpoint, key, model, log)
    }

    fn attempt(&self, body: &serde_json::Value) -> Result<String, (bool, BackendError)> {
        let resp = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.key)
            .json(body)
            .send()
            .map_err(|e| (true, BackendError::Malformed(e.to_string())))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| (true, BackendError::Malformed(e.to_string())))?;
        if !status.is_success() {
            let retry = status.is_server_error() || status.as_u16() == 429;
            return Err((retry, BackendError::Rejected { status: status.as_u16(), body: text }));
        }
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| (false, BackendError::Malformed(e.to_string())))?;
        v.pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or_else(|| (false, BackendError::Malformed("no choices[0].message.content".into())))
    }
}

impl ModelBackend for LiveBackend {
    fn complete(&mut self, prompt: &str) -> Result<String, BackendError> {
        let body = json!({
            "model": self.model,
            "messages": [{ "role": "user", "content": prompt }],
        });
        let mut last = String::new();
        for attempt in 0..ATTEMPTS {
            if attempt > 0 {
                thread::sleep(BACKOFF * 2u32.pow(attempt - 1));
            }
            match self.attempt(&body) {
                Ok(completion) => {
                    if let Some(path) = &self.log {
                        let mut request = body.clone();
                        request["endpoint"] = json!(self.endpoint);
                        request["authorization"] = json!("Bearer <redacted>");
                        let e = Exchange { prompt_sha256: digest(prompt), completion: completion.clone(), request: Some(request) };
                        let mut f = OpenOptions::new().create(true).append(true).open(path)?;
                        writeln!(f, "{}", serde_json::to_string(&e).expect("exchange serializes"))?;
                    }
                    return Ok(completion);
                }
                Err((true, e)) => {
                    log::warn!("model request attempt {} failed: {e}", attempt + 1);
                    last = e.to_string();
                }
                Err((false, e)) => return Err(e),
            }
        }
        Err(BackendError::Unreachable { attempts: ATTEMPTS, last })
    }
}

/// Contents of the first fenced code block in a completion.
pub fn extract_code_block(text: &str) -> Result<String, ExtractionError> {
    let start = text.find("```").ok_or(ExtractionError)?;
    let after_fence = &text[start + 3..];
    // skip the info string (language tag)
    let body_start = after_fence.find('\n').ok_or(ExtractionError)? + 1;
    let body = &after_fence[body_start..];
    let mut offset = 0;
    for line in body.split_inclusive('\n') {
        if line.trim_start().starts_with("```") {
            return Ok(body[..offset].to_string());
        }
        offset += line.len();
    }
    Err(ExtractionError)
}

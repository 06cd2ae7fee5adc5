//! Remote chat-model access: deterministic prompt assembly, strict binary
//! output parsing, and a transport with retries, caching, and usage
//! accounting.
//!
//! The wire protocol is JSON-over-HTTP in the chat-completion style
//! (messages array of role/content); endpoint URL and model name are fully
//! configurable so any compatible provider works.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Env var holding the API key for remote backends.
pub const API_KEY_ENV: &str = "BIAS_REFINERY_API_KEY";

/// Model queried when the caller does not override one.
pub const DEFAULT_MODEL_NAME: &str = "gpt-4o-mini";

/// System text for the race/ethnicity relatedness prompt.
pub const WSD_SYSTEM_TEXT: &str =
    "You are a helpful assistant that determines if the sentence is race or ethnicity related";

/// Task skeleton for the zero-shot chain-of-thought relatedness prompt;
/// `{text}` is replaced by the sentence under judgment.
pub const WSD_TASK_TEXT: &str = "Given the sentence '{text}', think step by step: Is this sentence race or ethnicity related? Only output 1 or 0. If this sentence contains any terms relating to race or ethnicity, state 1. Otherwise, state 0.";

/// System text for the bias classification prompt.
pub const BIAS_SYSTEM_TEXT: &str =
    "You are a helpful assistant that determines if text is biased";

/// Task text for the bias classification prompt, shared by the zero- and
/// few-shot modes.
pub const BIAS_TASK_TEXT: &str = "Given text, determine if the text contains bias or no bias. The bias may target gender, sex, race, ethnicity, age, and/or geography, include exclusive language, or make unsupported claims. The text may also contain no bias at all. If the text has bias state 1, if the text does not have bias state 0.";

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("missing API key: set {API_KEY_ENV} or configure api_key")]
    MissingApiKey,
    #[error("endpoint URL is not configured")]
    MissingEndpoint,
    #[error("authentication rejected by endpoint")]
    AuthenticationFailed,
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("retries exhausted after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("cannot extract a 0/1 label from response: {raw:?}")]
    UnparsableOutput { raw: String },
    #[error("few-shot prompt requires at least one shot")]
    EmptyShots,
    #[error("invalid chat request: {0}")]
    InvalidRequest(String),
    #[error("cache I/O failure at {path}: {source}")]
    Cache {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Message author. The system text travels separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

/// One fully rendered chat request. Field order is the canonical
/// serialization order used for cache keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub model_name: String,
}

impl ChatRequest {
    /// Validates: non-empty system and messages, roles alternating and
    /// starting with user.
    pub fn new(
        system: impl Into<String>,
        messages: Vec<Message>,
        temperature: f64,
        model_name: impl Into<String>,
    ) -> Result<Self, LlmError> {
        let system = system.into();
        if system.is_empty() {
            return Err(LlmError::InvalidRequest("system text is empty".into()));
        }
        if messages.is_empty() {
            return Err(LlmError::InvalidRequest("messages are empty".into()));
        }
        for (i, m) in messages.iter().enumerate() {
            let expected = if i % 2 == 0 { Role::User } else { Role::Assistant };
            if m.role != expected {
                return Err(LlmError::InvalidRequest(format!(
                    "message {i} must have role {expected:?}; roles alternate starting with user"
                )));
            }
        }
        Ok(ChatRequest {
            system,
            messages,
            temperature,
            model_name: model_name.into(),
        })
    }

    pub fn with_model(mut self, model_name: impl Into<String>) -> Self {
        self.model_name = model_name.into();
        self
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    /// Canonical byte rendering; equal requests hash to equal cache keys.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("request serializes")
    }

    pub fn cache_key(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

/// Prompt families shipped with the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    WsdZeroShotCot,
    BiasZeroShot,
    BiasFewShot,
}

/// An in-context example: input text and its 0/1 label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shot {
    pub input: String,
    pub label: u8,
}

/// A prompt template: fixed system and task text plus optional shots.
/// Zero-shot kinds carry no shots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub kind: PromptKind,
    pub system_text: String,
    pub task_text: String,
    pub shots: Vec<Shot>,
}

impl PromptTemplate {
    pub fn wsd_zero_shot_cot() -> Self {
        PromptTemplate {
            kind: PromptKind::WsdZeroShotCot,
            system_text: WSD_SYSTEM_TEXT.into(),
            task_text: WSD_TASK_TEXT.into(),
            shots: Vec::new(),
        }
    }

    pub fn bias_zero_shot() -> Self {
        PromptTemplate {
            kind: PromptKind::BiasZeroShot,
            system_text: BIAS_SYSTEM_TEXT.into(),
            task_text: BIAS_TASK_TEXT.into(),
            shots: Vec::new(),
        }
    }

    pub fn bias_few_shot(shots: Vec<Shot>) -> Result<Self, LlmError> {
        if shots.is_empty() {
            return Err(LlmError::EmptyShots);
        }
        Ok(PromptTemplate {
            kind: PromptKind::BiasFewShot,
            system_text: BIAS_SYSTEM_TEXT.into(),
            task_text: BIAS_TASK_TEXT.into(),
            shots,
        })
    }
}

/// The default few-shot example set for bias classification.
pub fn default_bias_shots() -> Vec<Shot> {
    vec![
        Shot {
            input: "52 year old, married female with one daughter, employed as a school administrator with no prior psych history reports 2 month h/o [history of] sadness, subjective anxiety and intermittent trouble falling asleep.".into(),
            label: 1,
        },
        Shot {
            input: "Once patient is on another treatment for her disorder, she no longer needs this medication.".into(),
            label: 0,
        },
        Shot {
            input: "Recent meta-analysis suggested no difference in prevalence among countries, rate is 1-2% with increase during late adolescence.".into(),
            label: 1,
        },
    ]
}

/// Zero-shot chain-of-thought relatedness prompt for one sentence. The
/// sentence is inlined verbatim; braces in it are preserved literally.
/// Classification calls default to temperature 0.
pub fn build_wsd_prompt(text: &str) -> ChatRequest {
    let user = WSD_TASK_TEXT.replacen("{text}", text, 1);
    ChatRequest::new(
        WSD_SYSTEM_TEXT,
        vec![Message {
            role: Role::User,
            content: user,
        }],
        0.0,
        DEFAULT_MODEL_NAME,
    )
    .expect("well-formed by construction")
}

/// Bias prompting mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    ZeroShot,
    FewShot,
}

/// Bias classification prompt. Zero-shot renders one user message holding
/// the task text and the query. Few-shot renders the task with the first
/// shot, the remaining shots as alternating user/assistant turns, then the
/// query.
pub fn build_bias_prompt(
    text: &str,
    mode: PromptMode,
    shots: &[Shot],
) -> Result<ChatRequest, LlmError> {
    let mut messages = Vec::new();
    match mode {
        PromptMode::ZeroShot => {
            messages.push(Message {
                role: Role::User,
                content: format!("{BIAS_TASK_TEXT}\n\n{text}"),
            });
        }
        PromptMode::FewShot => {
            if shots.is_empty() {
                return Err(LlmError::EmptyShots);
            }
            for (i, shot) in shots.iter().enumerate() {
                let content = if i == 0 {
                    format!("{BIAS_TASK_TEXT}\n\n{}", shot.input)
                } else {
                    shot.input.clone()
                };
                messages.push(Message {
                    role: Role::User,
                    content,
                });
                messages.push(Message {
                    role: Role::Assistant,
                    content: shot.label.to_string(),
                });
            }
            messages.push(Message {
                role: Role::User,
                content: text.to_string(),
            });
        }
    }
    ChatRequest::new(BIAS_SYSTEM_TEXT, messages, 0.0, DEFAULT_MODEL_NAME)
}

/// Extract the binary label from a model response.
///
/// Accepts an exact "0"/"1" after trimming, or chain-of-thought text whose
/// final standalone token is a 0 or 1. A response whose closing clause
/// offers both digits ("either 0 or 1") is ambiguous; anything without a
/// final 0/1 token is unparsable. No label is ever fabricated.
pub fn parse_binary_output(response: &str) -> Result<u8, LlmError> {
    let trimmed = response.trim();
    match trimmed {
        "0" => return Ok(0),
        "1" => return Ok(1),
        _ => {}
    }
    let err = || LlmError::UnparsableOutput {
        raw: response.to_string(),
    };
    let tokens = crate::text::token_strings(trimmed);
    let last = tokens.last().ok_or_else(err)?;
    let value = match last.as_str() {
        "0" => 0u8,
        "1" => 1u8,
        _ => return Err(err()),
    };
    // The closing clause is everything after the last sentence delimiter,
    // once trailing punctuation is stripped. If the other digit also stands
    // alone there, the response did not commit to a single label.
    let body = trimmed.trim_end_matches(|c: char| !c.is_alphanumeric());
    let clause = match body.rfind(['.', '!', '?', ':', ';']) {
        Some(idx) => &body[idx + 1..],
        None => body,
    };
    let other = if value == 0 { "1" } else { "0" };
    if crate::text::token_strings(clause).iter().any(|t| t == other) {
        return Err(err());
    }
    Ok(value)
}

/// Token counts reported by the endpoint, when available.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// Raw transport result: the model text plus optional usage numbers.
#[derive(Debug, Clone)]
pub struct TransportResponse {
    pub text: String,
    pub usage: Option<TokenUsage>,
}

/// Transport failures, split by how the client should react.
#[derive(Debug, Error)]
pub enum TransportError {
    /// 429 or 5xx; worth retrying with backoff.
    #[error("transient failure (status {status})")]
    Transient { status: u16 },
    #[error("authentication rejected (status {status})")]
    Auth { status: u16 },
    #[error("request timed out")]
    Timeout,
    #[error("permanent failure: {0}")]
    Permanent(String),
}

/// Pluggable wire layer, so tests can script responses.
pub trait ChatTransport: Send + Sync {
    fn send(
        &self,
        endpoint: &str,
        api_key: &str,
        request: &ChatRequest,
    ) -> Result<TransportResponse, TransportError>;
}

/// reqwest-based transport speaking the chat-completion JSON shape.
pub struct HttpChatTransport {
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    temperature: f64,
    messages: Vec<WireMessage<'a>>,
}

#[derive(Deserialize)]
struct WireChoiceMessage {
    content: String,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireChoiceMessage,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    usage: Option<WireUsage>,
}

impl HttpChatTransport {
    pub fn new(timeout: Duration) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        Ok(HttpChatTransport { client })
    }
}

impl ChatTransport for HttpChatTransport {
    fn send(
        &self,
        endpoint: &str,
        api_key: &str,
        request: &ChatRequest,
    ) -> Result<TransportResponse, TransportError> {
        let mut messages = vec![WireMessage {
            role: "system",
            content: &request.system,
        }];
        for m in &request.messages {
            messages.push(WireMessage {
                role: match m.role {
                    Role::User => "user",
                    Role::Assistant => "assistant",
                },
                content: &m.content,
            });
        }
        let body = WireRequest {
            model: &request.model_name,
            temperature: request.temperature,
            messages,
        };
        let response = self
            .client
            .post(endpoint)
            .bearer_auth(api_key)
            .json(&body)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    TransportError::Timeout
                } else {
                    TransportError::Permanent(e.to_string())
                }
            })?;
        let status = response.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => return Err(TransportError::Auth { status }),
            429 | 500..=599 => return Err(TransportError::Transient { status }),
            _ => {
                return Err(TransportError::Permanent(format!(
                    "unexpected status {status}"
                )))
            }
        }
        let parsed: WireResponse = response
            .json()
            .map_err(|e| TransportError::Permanent(format!("malformed response body: {e}")))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| TransportError::Permanent("response has no choices".into()))?;
        Ok(TransportResponse {
            text: choice.message.content,
            usage: parsed.usage.map(|u| TokenUsage {
                prompt_tokens: u.prompt_tokens,
                completion_tokens: u.completion_tokens,
            }),
        })
    }
}

/// One cached response keyed by the rendered-request hash.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub response_text: String,
    /// Unix seconds at insertion time.
    pub created_at: u64,
}

/// Directory of content-addressed response files. Writes go through a
/// temp-file rename, so concurrent writers of the same key settle on a
/// whole file either way.
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, LlmError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|source| LlmError::Cache {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(ResponseCache { dir })
    }

    fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<CacheEntry>, LlmError> {
        let path = self.entry_path(key);
        match std::fs::read_to_string(&path) {
            Ok(raw) => {
                let entry: CacheEntry =
                    serde_json::from_str(&raw).map_err(|e| LlmError::Cache {
                        path: path.display().to_string(),
                        source: std::io::Error::other(e),
                    })?;
                Ok(Some(entry))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(source) => Err(LlmError::Cache {
                path: path.display().to_string(),
                source,
            }),
        }
    }

    pub fn put(&self, entry: &CacheEntry) -> Result<(), LlmError> {
        let path = self.entry_path(&entry.key);
        let tmp = self.dir.join(format!(".{}.tmp", entry.key));
        let json = serde_json::to_string_pretty(entry).expect("entry serializes");
        let io_err = |p: &Path, source| LlmError::Cache {
            path: p.display().to_string(),
            source,
        };
        std::fs::write(&tmp, json).map_err(|e| io_err(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| io_err(&path, e))?;
        Ok(())
    }
}

/// Client-side knobs; see the config file documentation for precedence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LlmConfig {
    pub endpoint_url: String,
    pub model_name: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub max_concurrency: usize,
    pub timeout_secs: u64,
    pub cache_dir: Option<PathBuf>,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint_url: String::new(),
            model_name: DEFAULT_MODEL_NAME.into(),
            api_key: None,
            max_attempts: 4,
            base_delay_ms: 500,
            max_concurrency: 4,
            timeout_secs: 60,
            cache_dir: None,
        }
    }
}

impl LlmConfig {
    /// Fill the API key from the environment when not set explicitly.
    pub fn resolve_api_key(mut self) -> Self {
        if self.api_key.is_none() {
            self.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        }
        self
    }
}

/// Counting semaphore bounding in-flight requests.
struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

impl Semaphore {
    fn new(permits: usize) -> Self {
        Semaphore {
            permits: Mutex::new(permits.max(1)),
            available: Condvar::new(),
        }
    }

    fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut permits = self.permits.lock().expect("semaphore lock");
        while *permits == 0 {
            permits = self.available.wait(permits).expect("semaphore wait");
        }
        *permits -= 1;
        SemaphoreGuard { semaphore: self }
    }
}

struct SemaphoreGuard<'a> {
    semaphore: &'a Semaphore,
}

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        let mut permits = self.semaphore.permits.lock().expect("semaphore lock");
        *permits += 1;
        self.semaphore.available.notify_one();
    }
}

/// Running totals of requests and token usage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    pub requests: u64,
    pub cache_hits: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// A completion plus whether it was served from cache.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub cached: bool,
}

/// Shareable client: cache lookup, bounded concurrency, retry with
/// exponential backoff.
pub struct LlmClient {
    config: LlmConfig,
    transport: Box<dyn ChatTransport>,
    cache: Option<ResponseCache>,
    semaphore: Semaphore,
    ledger: Mutex<CostLedger>,
}

impl LlmClient {
    /// Build a client over HTTP. The API key must be present before any
    /// network call is attempted.
    pub fn new(config: LlmConfig) -> Result<Self, LlmError> {
        let transport = HttpChatTransport::new(Duration::from_secs(config.timeout_secs))?;
        Self::with_transport(config, Box::new(transport))
    }

    /// Build a client over a custom transport (used by tests).
    pub fn with_transport(
        config: LlmConfig,
        transport: Box<dyn ChatTransport>,
    ) -> Result<Self, LlmError> {
        let config = config.resolve_api_key();
        if config.api_key.as_deref().unwrap_or("").is_empty() {
            return Err(LlmError::MissingApiKey);
        }
        if config.endpoint_url.is_empty() {
            return Err(LlmError::MissingEndpoint);
        }
        let cache = match &config.cache_dir {
            Some(dir) => Some(ResponseCache::new(dir)?),
            None => None,
        };
        Ok(LlmClient {
            semaphore: Semaphore::new(config.max_concurrency),
            cache,
            transport,
            ledger: Mutex::new(CostLedger::default()),
            config,
        })
    }

    pub fn model_name(&self) -> &str {
        &self.config.model_name
    }

    pub fn usage(&self) -> CostLedger {
        *self.ledger.lock().expect("ledger lock")
    }

    /// Complete a request. Cache hits short-circuit the transport; transient
    /// failures retry with exponential backoff up to `max_attempts`.
    pub fn complete(&self, request: &ChatRequest) -> Result<Completion, LlmError> {
        let key = request.cache_key();
        if let Some(cache) = &self.cache {
            if let Some(entry) = cache.get(&key)? {
                let mut ledger = self.ledger.lock().expect("ledger lock");
                ledger.cache_hits += 1;
                return Ok(Completion {
                    text: entry.response_text,
                    cached: true,
                });
            }
        }
        let api_key = self.config.api_key.as_deref().ok_or(LlmError::MissingApiKey)?;
        let _permit = self.semaphore.acquire();
        let mut last_error = String::new();
        for attempt in 0..self.config.max_attempts {
            if attempt > 0 {
                let delay = self.config.base_delay_ms.saturating_mul(1 << (attempt - 1));
                std::thread::sleep(Duration::from_millis(delay));
            }
            match self
                .transport
                .send(&self.config.endpoint_url, api_key, request)
            {
                Ok(response) => {
                    {
                        let mut ledger = self.ledger.lock().expect("ledger lock");
                        ledger.requests += 1;
                        if let Some(usage) = response.usage {
                            ledger.prompt_tokens += usage.prompt_tokens;
                            ledger.completion_tokens += usage.completion_tokens;
                        }
                    }
                    if let Some(cache) = &self.cache {
                        cache.put(&CacheEntry {
                            key: key.clone(),
                            response_text: response.text.clone(),
                            created_at: unix_now(),
                        })?;
                    }
                    return Ok(Completion {
                        text: response.text,
                        cached: false,
                    });
                }
                Err(TransportError::Auth { .. }) => return Err(LlmError::AuthenticationFailed),
                Err(TransportError::Timeout) => {
                    return Err(LlmError::Timeout(Duration::from_secs(
                        self.config.timeout_secs,
                    )))
                }
                Err(TransportError::Permanent(message)) => {
                    return Err(LlmError::Transport(message))
                }
                Err(e @ TransportError::Transient { .. }) => {
                    last_error = e.to_string();
                }
            }
        }
        Err(LlmError::RetriesExhausted {
            attempts: self.config.max_attempts,
            last: last_error,
        })
    }
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Scripted transport for tests: pops one canned result per call.
pub struct ScriptedTransport {
    responses: Mutex<Vec<Result<String, u16>>>,
    pub calls: Mutex<Vec<String>>,
}

impl ScriptedTransport {
    /// `responses` are consumed in order; `Err(status)` yields a transient
    /// failure with that status.
    pub fn new(responses: Vec<Result<String, u16>>) -> Self {
        ScriptedTransport {
            responses: Mutex::new(responses),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn remaining(&self) -> usize {
        self.responses.lock().expect("script lock").len()
    }
}

impl ChatTransport for ScriptedTransport {
    fn send(
        &self,
        _endpoint: &str,
        _api_key: &str,
        request: &ChatRequest,
    ) -> Result<TransportResponse, TransportError> {
        self.calls
            .lock()
            .expect("calls lock")
            .push(request.cache_key());
        let mut responses = self.responses.lock().expect("script lock");
        if responses.is_empty() {
            return Err(TransportError::Permanent("script exhausted".into()));
        }
        match responses.remove(0) {
            Ok(text) => Ok(TransportResponse { text, usage: None }),
            Err(status) if status == 401 || status == 403 => Err(TransportError::Auth { status }),
            Err(status) => Err(TransportError::Transient { status }),
        }
    }
}

/// Map keyed by rendered request, for fully scripted per-prompt replies.
pub struct MapTransport {
    by_key: BTreeMap<String, String>,
    fallback: Option<String>,
}

impl MapTransport {
    pub fn new(by_key: BTreeMap<String, String>, fallback: Option<String>) -> Self {
        MapTransport { by_key, fallback }
    }
}

impl ChatTransport for MapTransport {
    fn send(
        &self,
        _endpoint: &str,
        _api_key: &str,
        request: &ChatRequest,
    ) -> Result<TransportResponse, TransportError> {
        let key = request.canonical_json();
        match self.by_key.get(&key).or(self.fallback.as_ref()) {
            Some(text) => Ok(TransportResponse {
                text: text.clone(),
                usage: None,
            }),
            None => Err(TransportError::Permanent("no scripted response".into())),
        }
    }
}

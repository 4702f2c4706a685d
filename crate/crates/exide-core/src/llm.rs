//! Model backends with deterministic record/replay.
//!
//! Every request is keyed by a digest of its canonical JSON form, so a
//! transcript recorded once can replay the exact same conversation later
//! with no network access. Transcripts are JSONL files of [`Exchange`]
//! records; when a digest appears more than once the last record wins,
//! which lets a re-recorded run simply append.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// One completion request. The digest covers exactly these fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub system: Option<String>,
    pub user: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl CompletionRequest {
    pub fn new(user: impl Into<String>, model: impl Into<String>) -> CompletionRequest {
        CompletionRequest {
            system: None,
            user: user.into(),
            model: model.into(),
            temperature: 0.0,
            max_tokens: 2048,
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for byte in bytes {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

/// Canonical JSON for digesting: compact, keys sorted, all five fields
/// always present (absent system serializes as null).
pub(crate) fn canonical_request_json(request: &CompletionRequest) -> String {
    serde_json::to_string(&serde_json::json!({
        "max_tokens": request.max_tokens,
        "model": request.model,
        "system": request.system,
        "temperature": request.temperature,
        "user": request.user,
    }))
    .expect("canonical request JSON never fails to serialize")
}

/// Lowercase hex SHA-256 of the canonical request JSON.
pub fn request_digest(request: &CompletionRequest) -> String {
    hex(&Sha256::digest(canonical_request_json(request).as_bytes()))
}

/// One recorded request/response pair, as stored in transcripts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub request_digest: String,
    pub prompt_text: String,
    pub response_text: String,
    pub model: String,
    pub timestamp: String,
    pub latency_ms: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("network error talking to `{endpoint}`: {detail}")]
    Network { endpoint: String, detail: String },
    #[error("HTTP {code} from the completion endpoint: {body}")]
    HttpStatus { code: u16, body: String },
    #[error("completion response is not in the expected shape: {detail}")]
    MalformedResponse { detail: String },
    #[error("no transcript entry for request digest {digest}")]
    MissingTranscript { digest: String },
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("transcript `{path}` line {line} is not a valid exchange record: {detail}")]
    MalformedTranscript { path: PathBuf, line: usize, detail: String },
    #[error("cannot access `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Timestamp written by the scripted backend, fixed so that recorded
/// fixtures are byte-stable.
pub const SCRIPTED_TIMESTAMP: &str = "2026-01-01T00:00:00Z";

const HTTP_ATTEMPTS: u32 = 3;

struct InFlightGate {
    open: Mutex<usize>,
    freed: Condvar,
    limit: usize,
}

impl InFlightGate {
    fn new(limit: usize) -> InFlightGate {
        InFlightGate { open: Mutex::new(0), freed: Condvar::new(), limit: limit.max(1) }
    }

    fn acquire(&self) -> InFlightPermit<'_> {
        let mut active = self.open.lock().unwrap();
        while *active >= self.limit {
            active = self.freed.wait(active).unwrap();
        }
        *active += 1;
        InFlightPermit { gate: self }
    }
}

struct InFlightPermit<'a> {
    gate: &'a InFlightGate,
}

impl Drop for InFlightPermit<'_> {
    fn drop(&mut self) {
        let mut active = self.gate.open.lock().unwrap();
        *active -= 1;
        self.gate.freed.notify_one();
    }
}

/// Live HTTP backend speaking the common chat-completions wire format.
///
/// The key is held only in memory: `Debug` redacts it and the struct is
/// deliberately not serializable, so it cannot leak into transcripts,
/// logs, or serialized pipeline output.
pub struct HttpBackend {
    pub endpoint: String,
    api_key: Option<String>,
    retry_base: Duration,
    gate: InFlightGate,
    client: reqwest::blocking::Client,
}

impl fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpBackend")
            .field("endpoint", &self.endpoint)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("max_in_flight", &self.gate.limit)
            .field("retry_base", &self.retry_base)
            .finish()
    }
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>) -> HttpBackend {
        HttpBackend {
            endpoint: endpoint.into(),
            api_key: None,
            retry_base: Duration::from_millis(250),
            gate: InFlightGate::new(4),
            client: reqwest::blocking::Client::new(),
        }
    }

    pub fn with_api_key(mut self, key: Option<String>) -> HttpBackend {
        self.api_key = key;
        self
    }

    pub fn with_max_in_flight(mut self, limit: usize) -> HttpBackend {
        self.gate = InFlightGate::new(limit);
        self
    }

    pub fn with_retry_base(mut self, base: Duration) -> HttpBackend {
        self.retry_base = base;
        self
    }

    fn complete(&self, request: &CompletionRequest) -> Result<Exchange, LlmError> {
        let _permit = self.gate.acquire();
        let mut messages = Vec::with_capacity(2);
        if let Some(system) = &request.system {
            messages.push(serde_json::json!({"role": "system", "content": system}));
        }
        messages.push(serde_json::json!({"role": "user", "content": request.user}));
        let body = serde_json::json!({
            "model": request.model,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });

        let started = Instant::now();
        let mut last_failure: Option<LlmError> = None;
        for attempt in 1..=HTTP_ATTEMPTS {
            if attempt > 1 {
                std::thread::sleep(self.retry_base * 2u32.pow(attempt - 2));
            }
            let mut builder = self.client.post(&self.endpoint).json(&body);
            if let Some(key) = &self.api_key {
                builder = builder.bearer_auth(key);
            }
            match builder.send() {
                Ok(response) => {
                    let status = response.status();
                    if status.is_success() {
                        let parsed: ChatResponse = response.json().map_err(|e| {
                            LlmError::MalformedResponse { detail: e.to_string() }
                        })?;
                        let content = parsed
                            .choices
                            .into_iter()
                            .next()
                            .map(|c| c.message.content)
                            .ok_or_else(|| LlmError::MalformedResponse {
                                detail: "response carries no choices".to_string(),
                            })?;
                        return Ok(Exchange {
                            request_digest: request_digest(request),
                            prompt_text: request.user.clone(),
                            response_text: content,
                            model: request.model.clone(),
                            timestamp: chrono::Utc::now()
                                .to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                            latency_ms: started.elapsed().as_millis() as u64,
                        });
                    }
                    let code = status.as_u16();
                    let text = response.text().unwrap_or_default();
                    if code == 429 {
                        last_failure = Some(LlmError::RateLimited { attempts: attempt });
                    } else if status.is_server_error() {
                        last_failure = Some(LlmError::HttpStatus { code, body: text });
                    } else {
                        return Err(LlmError::HttpStatus { code, body: text });
                    }
                }
                Err(e) => {
                    last_failure = Some(LlmError::Network {
                        endpoint: self.endpoint.clone(),
                        detail: e.to_string(),
                    });
                }
            }
        }
        Err(last_failure.expect("loop ran at least once"))
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

/// Where completions come from.
#[derive(Debug)]
pub enum Backend {
    /// Live HTTP calls.
    Http(HttpBackend),
    /// Previously recorded exchanges, keyed by request digest.
    Replay(BTreeMap<String, Exchange>),
    /// Canned response texts keyed by request digest; used for tests and
    /// for blessing fixtures. Produces a fixed timestamp and zero latency
    /// so recorded output is byte-stable.
    Scripted(BTreeMap<String, String>),
}

impl Backend {
    /// Builds a replay backend from a transcript file.
    pub fn replay_from_path(path: impl AsRef<Path>) -> Result<Backend, LlmError> {
        Ok(Backend::Replay(load_transcript(path)?))
    }

    /// Builds a scripted backend from request/response pairs.
    pub fn scripted(
        pairs: impl IntoIterator<Item = (CompletionRequest, String)>,
    ) -> Backend {
        Backend::Scripted(
            pairs
                .into_iter()
                .map(|(request, response)| (request_digest(&request), response))
                .collect(),
        )
    }

    /// Resolves one request to an exchange.
    pub fn complete(&self, request: &CompletionRequest) -> Result<Exchange, LlmError> {
        let digest = request_digest(request);
        match self {
            Backend::Http(http) => http.complete(request),
            Backend::Replay(map) => map
                .get(&digest)
                .cloned()
                .ok_or(LlmError::MissingTranscript { digest }),
            Backend::Scripted(map) => {
                let response = map
                    .get(&digest)
                    .cloned()
                    .ok_or_else(|| LlmError::MissingTranscript { digest: digest.clone() })?;
                Ok(Exchange {
                    request_digest: digest,
                    prompt_text: request.user.clone(),
                    response_text: response,
                    model: request.model.clone(),
                    timestamp: SCRIPTED_TIMESTAMP.to_string(),
                    latency_ms: 0,
                })
            }
        }
    }
}

/// Completes a request and appends the exchange to a transcript file,
/// creating the file if needed. Works with any backend, so fixtures can
/// be blessed from a scripted source as well as recorded live.
pub fn record(
    request: &CompletionRequest,
    backend: &Backend,
    path: impl AsRef<Path>,
) -> Result<Exchange, LlmError> {
    let exchange = backend.complete(request)?;
    append_exchange(path, &exchange)?;
    Ok(exchange)
}

/// Appends one exchange as a JSONL line.
pub fn append_exchange(path: impl AsRef<Path>, exchange: &Exchange) -> Result<(), LlmError> {
    let path = path.as_ref();
    let io = |source| LlmError::Io { path: path.to_path_buf(), source };
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io)?;
    let line = serde_json::to_string(exchange).expect("exchange serializes");
    writeln!(file, "{line}").map_err(io)
}

/// Loads a JSONL transcript into a digest-keyed map. Later lines replace
/// earlier ones with the same digest.
pub fn load_transcript(path: impl AsRef<Path>) -> Result<BTreeMap<String, Exchange>, LlmError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|source| LlmError::Io { path: path.to_path_buf(), source })?;
    let mut map = BTreeMap::new();
    for (index, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| LlmError::Io { path: path.to_path_buf(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let exchange: Exchange =
            serde_json::from_str(&line).map_err(|e| LlmError::MalformedTranscript {
                path: path.to_path_buf(),
                line: index + 1,
                detail: e.to_string(),
            })?;
        map.insert(exchange.request_digest.clone(), exchange);
    }
    Ok(map)
}

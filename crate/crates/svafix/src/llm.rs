//! LLM backends behind one trait: a live chat-completions HTTP client, a
//! replay client fed from JSONL fixtures, a rule-based mock, and a
//! recording wrapper. Fixture lookups are keyed by a content hash of the
//! normalized prompt, so replays are byte-deterministic.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("llm backend error: {message}")]
    Backend { message: String },
    #[error("no fixture recorded for prompt hash {hash}")]
    FixtureMiss { hash: String },
    #[error("no mock rule matches prompt starting `{prompt_head}`")]
    MockUnmatched { prompt_head: String },
    #[error("fixture store i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed fixture or response: {message}")]
    Malformed { message: String },
}

/// System+user prompt pair. Hashing and fixture lookups go through the
/// normalized form so formatting-only changes don't invalidate fixtures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

impl Prompt {
    pub fn new(system: impl Into<String>, user: impl Into<String>) -> Prompt {
        Prompt {
            system: system.into(),
            user: user.into(),
        }
    }

    pub fn normalized_system(&self) -> String {
        normalize(&self.system)
    }

    pub fn normalized_user(&self) -> String {
        normalize(&self.user)
    }

    /// Hex SHA-256 over `normalized_system \0 normalized_user`.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.normalized_system().as_bytes());
        h.update([0u8]);
        h.update(self.normalized_user().as_bytes());
        let out = h.finalize();
        let mut s = String::with_capacity(64);
        for b in out {
            s.push_str(&format!("{:02x}", b));
        }
        s
    }
}

/// CRLF → LF, runs of spaces/tabs collapsed to one space, trailing
/// whitespace stripped per line. Idempotent.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for (i, line) in text.replace("\r\n", "\n").split('\n').enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let mut prev_blank = false;
        let mut cur = String::new();
        for c in line.chars() {
            if c == ' ' || c == '\t' {
                if !prev_blank {
                    cur.push(' ');
                }
                prev_blank = true;
            } else {
                cur.push(c);
                prev_blank = false;
            }
        }
        out.push_str(cur.trim_end());
    }
    out
}

#[derive(Debug, Clone)]
pub struct LlmResponse {
    pub text: String,
    pub backend: String,
    pub latency: Duration,
    /// (prompt tokens, completion tokens) when the backend reports them.
    pub tokens: Option<(u32, u32)>,
}

pub trait LlmClient: Send + Sync {
    fn complete(&self, p: &Prompt) -> Result<LlmResponse, LlmError>;
    fn id(&self) -> &str;
}

// ---- fixture store ----

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct FixtureEntry {
    pub hash: String,
    pub system: String,
    pub user: String,
    pub response: String,
    pub backend: String,
    pub timestamp: String,
}

/// JSONL-backed map from prompt hash to recorded response. One JSON object
/// per line; later lines with the same hash supersede earlier ones.
#[derive(Debug, Default, Clone)]
pub struct FixtureStore {
    entries: BTreeMap<String, FixtureEntry>,
}

impl FixtureStore {
    pub fn empty() -> FixtureStore {
        FixtureStore::default()
    }

    pub fn load(path: &Path) -> Result<FixtureStore, LlmError> {
        let file = std::fs::File::open(path)?;
        let mut store = FixtureStore::empty();
        for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: FixtureEntry =
                serde_json::from_str(&line).map_err(|e| LlmError::Malformed {
                    message: format!("{}:{}: {}", path.display(), lineno + 1, e),
                })?;
            store.entries.insert(entry.hash.clone(), entry);
        }
        Ok(store)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, hash: &str) -> Option<&FixtureEntry> {
        self.entries.get(hash)
    }

    /// Returns true when an existing entry was overwritten.
    pub fn insert(&mut self, entry: FixtureEntry) -> bool {
        self.entries.insert(entry.hash.clone(), entry).is_some()
    }

    pub fn save(&self, path: &Path) -> Result<(), LlmError> {
        let mut f = std::fs::File::create(path)?;
        for entry in self.entries.values() {
            let line = serde_json::to_string(entry).map_err(|e| LlmError::Malformed {
                message: e.to_string(),
            })?;
            writeln!(f, "{}", line)?;
        }
        Ok(())
    }
}

/// Appends one record to the in-memory store and, when a path is given, to
/// the JSONL file. A repeated hash overwrites the previous response with a
/// warning, since a changed answer for the same prompt is worth noticing.
pub fn record(
    p: &Prompt,
    r: &LlmResponse,
    store: &mut FixtureStore,
    path: Option<&Path>,
) -> Result<(), LlmError> {
    let entry = FixtureEntry {
        hash: p.hash(),
        system: p.normalized_system(),
        user: p.normalized_user(),
        response: r.text.clone(),
        backend: r.backend.clone(),
        timestamp: unix_timestamp(),
    };
    if store.insert(entry.clone()) {
        log::warn!("fixture for hash {} overwritten", entry.hash);
    }
    if let Some(path) = path {
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?;
        let line = serde_json::to_string(&entry).map_err(|e| LlmError::Malformed {
            message: e.to_string(),
        })?;
        writeln!(f, "{}", line)?;
    }
    Ok(())
}

fn unix_timestamp() -> String {
    match std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH) {
        Ok(d) => d.as_secs().to_string(),
        Err(_) => "0".to_string(),
    }
}

// ---- backends ----

/// Chat-completions HTTP backend. Requests carry the model name, a
/// system+user message pair, and temperature 0 unless configured.
pub struct HttpClient {
    endpoint: String,
    api_key: Option<String>,
    model: String,
    temperature: f64,
    agent: reqwest::blocking::Client,
    ident: String,
}

impl HttpClient {
    pub fn new(endpoint: &str, api_key: Option<&str>, model: &str) -> HttpClient {
        HttpClient {
            endpoint: endpoint.to_string(),
            api_key: api_key.map(|s| s.to_string()),
            model: model.to_string(),
            temperature: 0.0,
            agent: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(60))
                .build()
                .expect("http client"),
            ident: format!("http:{}", model),
        }
    }

    pub fn with_temperature(mut self, t: f64) -> HttpClient {
        self.temperature = t;
        self
    }

    /// Environment overrides for deployment without config edits.
    pub fn env_endpoint() -> Option<String> {
        std::env::var("SVAFIX_LLM_ENDPOINT").ok()
    }

    pub fn env_api_key() -> Option<String> {
        std::env::var("SVAFIX_LLM_API_KEY").ok()
    }

    pub fn env_model() -> Option<String> {
        std::env::var("SVAFIX_LLM_MODEL").ok()
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
    usage: Option<ChatUsage>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    content: String,
}

#[derive(Deserialize)]
struct ChatUsage {
    prompt_tokens: Option<u32>,
    completion_tokens: Option<u32>,
}

impl LlmClient for HttpClient {
    fn complete(&self, p: &Prompt) -> Result<LlmResponse, LlmError> {
        let body = ChatRequest {
            model: &self.model,
            messages: vec![
                ChatMessage {
                    role: "system",
                    content: &p.system,
                },
                ChatMessage {
                    role: "user",
                    content: &p.user,
                },
            ],
            temperature: self.temperature,
        };
        let started = Instant::now();
        let mut req = self.agent.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| LlmError::Backend {
            message: e.to_string(),
        })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| LlmError::Backend {
            message: e.to_string(),
        })?;
        if !status.is_success() {
            return Err(LlmError::Backend {
                message: format!("status {}: {}", status, text.chars().take(200).collect::<String>()),
            });
        }
        let parsed: ChatResponse = serde_json::from_str(&text).map_err(|e| LlmError::Malformed {
            message: format!("chat response: {}", e),
        })?;
        let choice = parsed.choices.first().ok_or_else(|| LlmError::Malformed {
            message: "chat response has no choices".to_string(),
        })?;
        Ok(LlmResponse {
            text: choice.message.content.clone(),
            backend: self.ident.clone(),
            latency: started.elapsed(),
            tokens: parsed
                .usage
                .and_then(|u| Some((u.prompt_tokens?, u.completion_tokens?))),
        })
    }

    fn id(&self) -> &str {
        &self.ident
    }
}

/// Replays recorded responses; any unrecorded prompt is a `FixtureMiss`
/// carrying the hash to record.
pub struct ReplayClient {
    store: FixtureStore,
}

impl ReplayClient {
    pub fn new(store: FixtureStore) -> ReplayClient {
        ReplayClient { store }
    }

    pub fn from_file(path: &Path) -> Result<ReplayClient, LlmError> {
        Ok(ReplayClient::new(FixtureStore::load(path)?))
    }
}

impl LlmClient for ReplayClient {
    fn complete(&self, p: &Prompt) -> Result<LlmResponse, LlmError> {
        let hash = p.hash();
        match self.store.lookup(&hash) {
            Some(entry) => Ok(LlmResponse {
                text: entry.response.clone(),
                backend: "replay".to_string(),
                latency: Duration::ZERO,
                tokens: None,
            }),
            None => Err(LlmError::FixtureMiss { hash }),
        }
    }

    fn id(&self) -> &str {
        "replay"
    }
}

/// Substring-rule mock for tests: first rule whose pattern occurs in the
/// user text wins.
#[derive(Default)]
pub struct MockClient {
    rules: Vec<(String, String)>,
}

impl MockClient {
    pub fn new() -> MockClient {
        MockClient::default()
    }

    pub fn rule(mut self, pattern: &str, response: &str) -> MockClient {
        self.rules.push((pattern.to_string(), response.to_string()));
        self
    }

    /// Catch-all mock answering every prompt the same way.
    pub fn always(response: &str) -> MockClient {
        MockClient::new().rule("", response)
    }
}

impl LlmClient for MockClient {
    fn complete(&self, p: &Prompt) -> Result<LlmResponse, LlmError> {
        for (pat, resp) in &self.rules {
            if p.user.contains(pat) {
                return Ok(LlmResponse {
                    text: resp.clone(),
                    backend: "mock".to_string(),
                    latency: Duration::ZERO,
                    tokens: None,
                });
            }
        }
        Err(LlmError::MockUnmatched {
            prompt_head: p.user.chars().take(60).collect(),
        })
    }

    fn id(&self) -> &str {
        "mock"
    }
}

/// Wraps another backend and appends every completed prompt/response pair
/// to a fixture file, building the replay corpus as it runs.
pub struct RecordingClient {
    inner: Box<dyn LlmClient>,
    store: Mutex<FixtureStore>,
    path: PathBuf,
    ident: String,
}

impl RecordingClient {
    pub fn new(inner: Box<dyn LlmClient>, path: &Path) -> Result<RecordingClient, LlmError> {
        let store = if path.exists() {
            FixtureStore::load(path)?
        } else {
            FixtureStore::empty()
        };
        let ident = format!("record({})", inner.id());
        Ok(RecordingClient {
            inner,
            store: Mutex::new(store),
            path: path.to_path_buf(),
            ident,
        })
    }
}

impl LlmClient for RecordingClient {
    fn complete(&self, p: &Prompt) -> Result<LlmResponse, LlmError> {
        let r = self.inner.complete(p)?;
        let mut store = self.store.lock().expect("fixture store lock");
        record(p, &r, &mut store, Some(&self.path))?;
        Ok(r)
    }

    fn id(&self) -> &str {
        &self.ident
    }
}

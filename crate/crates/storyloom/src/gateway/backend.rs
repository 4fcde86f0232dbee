//! Text-generation backends: a scripted backend for hermetic runs and an
//! OpenAI-compatible HTTP backend for real engines.

use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::Decoding;

/// How a single completion attempt failed.
#[derive(Debug)]
pub enum BackendFailure {
    /// Worth retrying: transport hiccups, rate limits, 5xx responses.
    Transient(String),
    /// Retrying cannot help: exhausted scripts, auth errors, bad requests.
    Fatal(String),
}

/// A completion source. `complete_raw` is one attempt; retry policy lives
/// in the gateway.
pub trait Backend: Send + Sync {
    fn id(&self) -> &str;

    fn complete_raw(
        &self,
        template_id: &str,
        prompt: &str,
        decoding: &Decoding,
    ) -> Result<String, BackendFailure>;
}

/// One scripted exchange. As a script entry, `template_id` is the matcher
/// (the literal "any" matches every request); as a transcript record it is
/// the template that produced the prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayRecord {
    #[serde(alias = "matcher")]
    pub template_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    pub response: String,
}

impl ReplayRecord {
    pub fn new(matcher: &str, response: &str) -> Self {
        ReplayRecord {
            template_id: matcher.to_string(),
            prompt: None,
            response: response.to_string(),
        }
    }
}

/// Serializes replay records as JSON lines.
pub fn write_replay_jsonl<W: std::io::Write>(
    records: &[ReplayRecord],
    mut w: W,
) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut w, record)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Deterministic backend that replays a fixed script.
///
/// Each request consumes the next entry whose matcher is the request's
/// template id or "any"; non-matching entries in between are skipped, so
/// one script can serve ablated runs that drop whole call classes.
pub struct ScriptedBackend {
    script: Vec<ReplayRecord>,
    cursor: Mutex<usize>,
}

impl ScriptedBackend {
    pub fn new(script: Vec<ReplayRecord>) -> Self {
        ScriptedBackend {
            script,
            cursor: Mutex::new(0),
        }
    }

    pub fn from_pairs(pairs: &[(&str, &str)]) -> Self {
        Self::new(
            pairs
                .iter()
                .map(|(m, r)| ReplayRecord::new(m, r))
                .collect(),
        )
    }

    /// Parses a JSON-lines replay file. Blank lines and `#` comments are
    /// ignored.
    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let mut script = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            script.push(serde_json::from_str(line)?);
        }
        Ok(Self::new(script))
    }

    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_jsonl(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    /// Entries not yet consumed (skipped entries count as consumed).
    pub fn remaining(&self) -> usize {
        self.script.len() - *self.cursor.lock().expect("cursor lock")
    }
}

impl Backend for ScriptedBackend {
    fn id(&self) -> &str {
        "scripted"
    }

    fn complete_raw(
        &self,
        template_id: &str,
        _prompt: &str,
        _decoding: &Decoding,
    ) -> Result<String, BackendFailure> {
        let mut cursor = self.cursor.lock().expect("cursor lock");
        for i in *cursor..self.script.len() {
            let entry = &self.script[i];
            if entry.template_id == "any" || entry.template_id == template_id {
                *cursor = i + 1;
                return Ok(entry.response.clone());
            }
        }
        *cursor = self.script.len();
        Err(BackendFailure::Fatal(format!(
            "script underrun: no entry left for template {template_id:?}"
        )))
    }
}

/// OpenAI-compatible chat-completion backend.
///
/// Credentials come only from the environment (`STORYLOOM_API_KEY`); the
/// base URL and model name are configuration.
pub struct HttpBackend {
    base_url: String,
    model: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

pub const API_KEY_ENV: &str = "STORYLOOM_API_KEY";

impl HttpBackend {
    pub fn new(base_url: &str, model: &str) -> Self {
        HttpBackend {
            base_url: base_url.trim_end_matches('/').to_string(),
            model: model.to_string(),
            api_key: std::env::var(API_KEY_ENV).ok(),
            client: reqwest::blocking::Client::new(),
        }
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
    max_tokens: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Deserialize)]
struct ChatResponseMessage {
    content: String,
}

impl Backend for HttpBackend {
    fn id(&self) -> &str {
        &self.model
    }

    fn complete_raw(
        &self,
        _template_id: &str,
        prompt: &str,
        decoding: &Decoding,
    ) -> Result<String, BackendFailure> {
        let body = ChatRequest {
            model: &self.model,
            messages: vec![ChatMessage {
                role: "user",
                content: prompt,
            }],
            temperature: decoding.temperature,
            max_tokens: decoding.max_tokens,
            seed: decoding.seed,
        };
        let mut req = self
            .client
            .post(format!("{}/chat/completions", self.base_url))
            .json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| BackendFailure::Transient(format!("transport: {e}")))?;
        let status = resp.status();
        if status.is_server_error() || status.as_u16() == 429 || status.as_u16() == 408 {
            return Err(BackendFailure::Transient(format!("http status {status}")));
        }
        if !status.is_success() {
            return Err(BackendFailure::Fatal(format!("http status {status}")));
        }
        let parsed: ChatResponse = resp
            .json()
            .map_err(|e| BackendFailure::Fatal(format!("malformed response body: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| BackendFailure::Fatal("response contained no choices".into()))
    }
}

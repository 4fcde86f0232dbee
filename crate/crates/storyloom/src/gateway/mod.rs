//! Uniform interface to text-generation backends.
//!
//! The gateway owns prompt templating, the retry loop, and structured
//! output parsing; backends only turn one prompt into one reply. The
//! scripted backend makes every pipeline and evaluation path runnable
//! offline and byte-deterministically.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod backend;
pub mod parse;
pub mod template;

pub use backend::{Backend, BackendFailure, HttpBackend, ReplayRecord, ScriptedBackend};
pub use parse::{
    parse_structured, RawPlan, RawReview, RawTriplet, SchemaId, Structured,
};
pub use template::{bindings, TemplateStore};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GatewayError {
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
    #[error("template placeholder {0:?} has no binding")]
    MissingBinding(String),
    #[error("binding {0:?} does not appear in the template")]
    UnusedBinding(String),
    #[error("scripted backend exhausted: {0}")]
    ScriptUnderrun(String),
    #[error("backend failed after {attempts} attempts: {last_error}")]
    BackendExhausted { attempts: u32, last_error: String },
    #[error("backend request failed: {0}")]
    Transport(String),
    #[error("could not parse {schema} from reply: {reason} (reply was: {snippet:?})")]
    ParseFailure {
        schema: &'static str,
        reason: String,
        snippet: String,
    },
}

/// Decoding parameters sent with each request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decoding {
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for Decoding {
    fn default() -> Self {
        Decoding {
            temperature: 0.0,
            max_tokens: 16384,
            seed: None,
        }
    }
}

/// A template id plus its bindings; the unit of work for [`Gateway::complete`].
#[derive(Debug, Clone, PartialEq)]
pub struct PromptRequest {
    pub template_id: String,
    pub bindings: BTreeMap<String, String>,
    pub decoding: Decoding,
}

impl PromptRequest {
    pub fn new(template_id: &str, bindings: BTreeMap<String, String>) -> Self {
        PromptRequest {
            template_id: template_id.to_string(),
            bindings,
            decoding: Decoding::default(),
        }
    }

    pub fn with_decoding(mut self, decoding: Decoding) -> Self {
        self.decoding = decoding;
        self
    }
}

/// A successful completion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub backend_id: String,
    /// 1 on first success; at most retry limit + 1.
    pub attempt_count: u32,
}

/// Retry settings for transient backend failures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    /// Retries after the first attempt; total attempts = retries + 1.
    pub max_retries: u32,
    /// First backoff delay; doubles per retry (1s, 2s, 4s by default).
    pub base_delay: Duration,
    /// Seed for backoff jitter.
    pub jitter_seed: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_secs(1),
            jitter_seed: 0,
        }
    }
}

impl RetryPolicy {
    /// No waiting between attempts; for scripted tests.
    pub fn immediate() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::ZERO,
            jitter_seed: 0,
        }
    }

    fn delay(&self, attempt: u32) -> Duration {
        let base = self.base_delay.saturating_mul(1 << attempt.min(16));
        // up to +25% deterministic jitter
        let jitter = splitmix64(self.jitter_seed ^ u64::from(attempt)) % 1000;
        base + base.mul_f64(jitter as f64 / 4000.0)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Templating plus retry front-end over a [`Backend`].
pub struct Gateway {
    templates: TemplateStore,
    retry: RetryPolicy,
    transcript: Option<Mutex<Vec<ReplayRecord>>>,
}

impl Default for Gateway {
    fn default() -> Self {
        Self::new(TemplateStore::builtin())
    }
}

impl Gateway {
    pub fn new(templates: TemplateStore) -> Self {
        Gateway {
            templates,
            retry: RetryPolicy::default(),
            transcript: None,
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// Records every successful request/response pair; see
    /// [`Gateway::take_transcript`].
    pub fn with_transcript(mut self) -> Self {
        self.transcript = Some(Mutex::new(Vec::new()));
        self
    }

    pub fn templates(&self) -> &TemplateStore {
        &self.templates
    }

    /// Renders a template against bindings. Pure substitution.
    pub fn render_template(
        &self,
        template_id: &str,
        bindings: &BTreeMap<String, String>,
    ) -> Result<String, GatewayError> {
        self.templates.render(template_id, bindings)
    }

    /// Renders the request and completes it, retrying transient failures
    /// with exponential backoff.
    pub fn complete(
        &self,
        backend: &dyn Backend,
        request: &PromptRequest,
    ) -> Result<Completion, GatewayError> {
        let prompt = self.render_template(&request.template_id, &request.bindings)?;
        let mut attempt = 0u32;
        loop {
            attempt += 1;
            match backend.complete_raw(&request.template_id, &prompt, &request.decoding) {
                Ok(text) => {
                    if let Some(log) = &self.transcript {
                        log.lock().expect("transcript lock").push(ReplayRecord {
                            template_id: request.template_id.clone(),
                            prompt: Some(prompt.clone()),
                            response: text.clone(),
                        });
                    }
                    return Ok(Completion {
                        text,
                        backend_id: backend.id().to_string(),
                        attempt_count: attempt,
                    });
                }
                Err(BackendFailure::Fatal(msg)) => {
                    return Err(if msg.contains("script underrun") {
                        GatewayError::ScriptUnderrun(msg)
                    } else {
                        GatewayError::Transport(msg)
                    });
                }
                Err(BackendFailure::Transient(msg)) => {
                    if attempt > self.retry.max_retries {
                        return Err(GatewayError::BackendExhausted {
                            attempts: attempt,
                            last_error: msg,
                        });
                    }
                    let delay = self.retry.delay(attempt - 1);
                    if !delay.is_zero() {
                        std::thread::sleep(delay);
                    }
                }
            }
        }
    }

    /// Drains the transcript collected so far. The records seed a
    /// [`ScriptedBackend`] for replay.
    pub fn take_transcript(&self) -> Vec<ReplayRecord> {
        match &self.transcript {
            Some(log) => std::mem::take(&mut *log.lock().expect("transcript lock")),
            None => Vec::new(),
        }
    }
}

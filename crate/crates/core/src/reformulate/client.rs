//! Chat-completion clients.
//!
//! The live client speaks the common `chat/completions` JSON shape: a single
//! user message carrying the whole prompt, with the answer read from
//! `choices[0].message.content`.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::prompt::PromptText;
use super::Source;

pub const API_URL_ENV: &str = "MOMENTFORGE_API_URL";
pub const API_KEY_ENV: &str = "MOMENTFORGE_API_KEY";

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("completion was empty")]
    EmptyCompletion,
}

pub trait ChatClient: Send + Sync {
    fn complete(&self, prompt: &PromptText) -> Result<String, ClientError>;

    fn source(&self) -> Source;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { attempts: 3, base_delay: Duration::from_secs(1) }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (1-based): base, 2*base, 4*base, ...
    pub fn delay(&self, retry: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(retry.saturating_sub(1))
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

pub struct HttpChatClient {
    url: String,
    api_key: Option<String>,
    retry: RetryPolicy,
    agent: ureq::Agent,
}

impl HttpChatClient {
    pub fn new(url: impl Into<String>, api_key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(Duration::from_secs(120))).build().into();
        Self { url: url.into(), api_key, retry: RetryPolicy::default(), agent }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// Reads the endpoint and key from the environment. `None` when neither
    /// is set; a key without an endpoint is a configuration error.
    pub fn from_env() -> Result<Option<Self>, String> {
        let url = std::env::var(API_URL_ENV).ok().filter(|s| !s.is_empty());
        let key = std::env::var(API_KEY_ENV).ok().filter(|s| !s.is_empty());
        match (url, key) {
            (Some(url), key) => Ok(Some(Self::new(url, key))),
            (None, Some(_)) => Err(format!("{API_KEY_ENV} is set but {API_URL_ENV} is not")),
            (None, None) => Ok(None),
        }
    }

    fn attempt(&self, prompt: &PromptText) -> Result<Option<String>, String> {
        let body = ChatRequest {
            model: &prompt.model_hint,
            messages: [ChatMessage { role: "user", content: &prompt.text }],
            temperature: prompt.temperature,
        };
        let mut req = self.agent.post(&self.url);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| e.to_string())?;
        let parsed: ChatResponse = resp.body_mut().read_json().map_err(|e| format!("bad response body: {e}"))?;
        Ok(parsed.choices.into_iter().next().and_then(|c| c.message.content))
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&self, prompt: &PromptText) -> Result<String, ClientError> {
        let attempts = self.retry.attempts.max(1);
        let mut last = String::new();
        for n in 1..=attempts {
            if n > 1 {
                std::thread::sleep(self.retry.delay(n - 1));
            }
            match self.attempt(prompt) {
                Ok(Some(text)) if !text.trim().is_empty() => return Ok(text),
                Ok(_) => return Err(ClientError::EmptyCompletion),
                Err(e) => last = e,
            }
        }
        Err(ClientError::Transport { attempts, message: last })
    }

    fn source(&self) -> Source {
        Source::Live
    }
}

//! Remote decision backend speaking the OpenAI-compatible chat wire
//! format, with bounded retries and a per-attempt audit log.
//!
//! The API key is read from the environment and excluded from
//! serialization; nothing derived from it may reach logs or artifacts.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::agent::{DecisionBackend, DecisionContext};
use crate::error::{Error, Result};

/// Environment variable holding the bearer token for remote endpoints.
pub const API_KEY_ENV: &str = "GENAINET_API_KEY";

/// Connection parameters for a chat-completion endpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GatewayConfig {
    /// Endpoint root; requests go to `{base_url}/chat/completions`.
    pub base_url: String,
    pub model_name: String,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    pub timeout_secs: u64,
    /// Extra attempts after the first on 429, 5xx, or transport failure.
    pub max_retries: u32,
    /// First backoff sleep; doubles per retry.
    pub backoff_base_ms: u64,
    /// Never serialized; sourced from [`API_KEY_ENV`].
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl GatewayConfig {
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model_name: model_name.into(),
            temperature: 0.2,
            max_tokens: None,
            timeout_secs: 60,
            max_retries: 3,
            backoff_base_ms: 1000,
            api_key: None,
        }
    }

    /// Pick up the API key from the environment, if set.
    pub fn with_env_key(mut self) -> Self {
        self.api_key = std::env::var(API_KEY_ENV).ok();
        self
    }
}

/// One row of the gateway audit log; exactly one per HTTP attempt.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttemptRecord {
    /// 0-based attempt index within one chat_complete call.
    pub attempt: u32,
    pub status: Option<u16>,
    pub ok: bool,
    /// Short outcome note ("ok", "retryable status 429", ...). Carries no
    /// request headers.
    pub outcome: String,
    pub latency_ms: u64,
}

/// A configured HTTP client plus its attempt log.
pub struct Gateway {
    config: GatewayConfig,
    client: reqwest::blocking::Client,
    attempts: Mutex<Vec<AttemptRecord>>,
}

impl Gateway {
    pub fn new(config: GatewayConfig) -> Result<Self> {
        if config.timeout_secs == 0 {
            return Err(Error::InvalidScenario("gateway timeout must be positive".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| Error::MalformedResponse(format!("client build failed: {e}")))?;
        Ok(Self {
            config,
            client,
            attempts: Mutex::new(Vec::new()),
        })
    }

    /// Snapshot of the audit log.
    pub fn attempts(&self) -> Vec<AttemptRecord> {
        self.attempts.lock().unwrap().clone()
    }

    fn record_attempt(&self, attempt: u32, status: Option<u16>, ok: bool, outcome: String, started: Instant) {
        let latency_ms = started.elapsed().as_millis() as u64;
        log::debug!("gateway attempt {attempt}: {outcome} ({latency_ms} ms)");
        self.attempts.lock().unwrap().push(AttemptRecord {
            attempt,
            status,
            ok,
            outcome,
            latency_ms,
        });
    }

    /// Issue one chat request (with retries) and return the first choice's
    /// content. Memory rides in the user message after a blank line since
    /// the wire protocol has no memory role.
    pub fn chat_complete(&self, system_text: &str, user_text: &str, memory_text: &str) -> Result<String> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let mut body = json!({
            "model": self.config.model_name,
            "messages": [
                {"role": "system", "content": system_text},
                {"role": "user", "content": compose_user_content(user_text, memory_text)},
            ],
            "temperature": self.config.temperature,
        });
        if let Some(max_tokens) = self.config.max_tokens {
            body["max_tokens"] = max_tokens.into();
        }

        let mut last_error = Error::Timeout { attempts: 0 };
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                let sleep_ms = self.config.backoff_base_ms.saturating_mul(1 << (attempt - 1));
                std::thread::sleep(Duration::from_millis(sleep_ms));
            }
            let started = Instant::now();
            let mut request = self.client.post(&url).json(&body);
            if let Some(key) = &self.config.api_key {
                request = request.bearer_auth(key);
            }
            match request.send() {
                Ok(response) => {
                    let status = response.status().as_u16();
                    if response.status().is_success() {
                        let value: serde_json::Value = match response.json() {
                            Ok(v) => v,
                            Err(e) => {
                                self.record_attempt(attempt, Some(status), false, format!("undecodable body: {e}"), started);
                                return Err(Error::MalformedResponse(format!("undecodable body: {e}")));
                            }
                        };
                        return match value["choices"][0]["message"]["content"].as_str() {
                            Some(text) => {
                                self.record_attempt(attempt, Some(status), true, "ok".into(), started);
                                Ok(text.to_string())
                            }
                            None => {
                                self.record_attempt(attempt, Some(status), false, "missing choices[0].message.content".into(), started);
                                Err(Error::MalformedResponse(
                                    "missing choices[0].message.content".into(),
                                ))
                            }
                        };
                    }
                    if status == 429 || status >= 500 {
                        self.record_attempt(attempt, Some(status), false, format!("retryable status {status}"), started);
                        last_error = Error::HttpStatus(status);
                        continue;
                    }
                    self.record_attempt(attempt, Some(status), false, format!("fatal status {status}"), started);
                    return Err(Error::HttpStatus(status));
                }
                Err(e) => {
                    let kind = if e.is_timeout() { "timeout" } else { "transport" };
                    self.record_attempt(attempt, None, false, format!("{kind} error"), started);
                    last_error = Error::Timeout { attempts: attempt + 1 };
                }
            }
        }
        Err(last_error)
    }
}

fn compose_user_content(user_text: &str, memory_text: &str) -> String {
    if memory_text.is_empty() {
        user_text.to_string()
    } else {
        format!("{user_text}\n\n{memory_text}")
    }
}

impl DecisionBackend for Gateway {
    fn decide(&self, ctx: &DecisionContext<'_>) -> Result<String> {
        self.chat_complete(ctx.system_text, ctx.user_text, ctx.memory_text)
    }
}

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{BackendKind, CompletionBackend, GatewayError, SamplingParams, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            base_delay_ms: 500,
            max_delay_ms: 30_000,
        }
    }
}

impl RetryPolicy {
    fn backoff(&self, attempt: u32) -> Duration {
        let ms = self
            .base_delay_ms
            .saturating_mul(1u64 << attempt.min(20))
            .min(self.max_delay_ms);
        Duration::from_millis(ms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    /// Full URL of an OpenAI-compatible chat completions endpoint.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub retry: RetryPolicy,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-3.5-turbo".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_secs: 120,
            retry: RetryPolicy::default(),
        }
    }
}

/// Blocking client for an OpenAI-compatible chat completions API.
pub struct HttpBackend {
    config: HttpConfig,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

enum Attempt {
    Done(Vec<String>),
    Retry { message: String, after: Option<Duration> },
    Fatal(String),
}

impl HttpBackend {
    /// Reads the key from the configured variable. An unset variable is
    /// allowed (some local servers need no key); an empty one is not.
    pub fn new(config: HttpConfig) -> Result<Self, GatewayError> {
        let api_key = match std::env::var(&config.api_key_env) {
            Ok(k) if k.trim().is_empty() => {
                return Err(GatewayError::Config(format!(
                    "{} is set but empty",
                    config.api_key_env
                )))
            }
            Ok(k) => Some(k),
            Err(_) => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs.max(1)))
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(HttpBackend {
            config,
            api_key,
            client,
        })
    }

    fn attempt(&self, prompt: &str, params: &SamplingParams, n: u32) -> Attempt {
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "n": n,
            "max_tokens": params.max_output_tokens,
        });
        let mut req = self.client.post(&self.config.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) => {
                return Attempt::Retry {
                    message: e.to_string(),
                    after: None,
                }
            }
        };
        let status = resp.status();
        let after = resp
            .headers()
            .get(reqwest::header::RETRY_AFTER)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<f64>().ok())
            .filter(|s| s.is_finite() && *s >= 0.0)
            .map(Duration::from_secs_f64);
        if status.as_u16() == 429 || status.is_server_error() {
            return Attempt::Retry {
                message: format!("HTTP {status}"),
                after,
            };
        }
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Attempt::Fatal(format!("HTTP {status}: {}", truncate(&text, 300)));
        }
        let value: Value = match resp.json() {
            Ok(v) => v,
            Err(e) => {
                return Attempt::Retry {
                    message: format!("unreadable body: {e}"),
                    after: None,
                }
            }
        };
        match parse_choices(&value) {
            Some(c) => Attempt::Done(c),
            None => Attempt::Retry {
                message: "response has no choices".into(),
                after: None,
            },
        }
    }
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

fn parse_choices(v: &Value) -> Option<Vec<String>> {
    let choices = v.get("choices")?.as_array()?;
    let out: Vec<String> = choices
        .iter()
        .filter_map(|c| {
            c.pointer("/message/content")
                .or_else(|| c.get("text"))
                .and_then(Value::as_str)
                .map(str::to_string)
        })
        .collect();
    (!out.is_empty()).then_some(out)
}

impl CompletionBackend for HttpBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Live
    }

    fn complete(
        &self,
        _stage: Stage,
        prompt: &str,
        params: &SamplingParams,
    ) -> Result<Vec<String>, GatewayError> {
        let want = params.n_samples as usize;
        let mut out = Vec::with_capacity(want);
        let mut attempts = 0u32;
        let mut last = String::new();
        while out.len() < want {
            if attempts >= self.config.retry.max_attempts.max(1) {
                return Err(GatewayError::Transport {
                    attempts,
                    message: last,
                });
            }
            let missing = (want - out.len()) as u32;
            match self.attempt(prompt, params, missing) {
                Attempt::Done(c) => {
                    out.extend(c.into_iter().take(missing as usize));
                }
                Attempt::Retry { message, after } => {
                    attempts += 1;
                    last = message;
                    if attempts < self.config.retry.max_attempts {
                        let wait = after
                            .unwrap_or_else(|| self.config.retry.backoff(attempts - 1))
                            .min(Duration::from_millis(self.config.retry.max_delay_ms));
                        std::thread::sleep(wait);
                    }
                }
                Attempt::Fatal(message) => {
                    return Err(GatewayError::Transport {
                        attempts: attempts + 1,
                        message,
                    })
                }
            }
        }
        Ok(out)
    }
}

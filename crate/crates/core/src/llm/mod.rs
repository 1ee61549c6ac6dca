//! Completion gateway with interchangeable backends.
//!
//! Every call goes through [`Gateway::complete`], which validates the
//! sampling parameters, caps in-flight requests and returns an
//! [`LlmExchange`]: the exact prompt, the parameters and the sampled
//! completions. Exchanges are the unit of record and replay; a fixture is
//! keyed by the SHA-256 of `stage ‖ 0x00 ‖ prompt` with the prompt taken
//! byte-for-byte.

mod backends;
mod fixtures;
mod http;
mod limiter;

use std::fmt;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use backends::{Recorder, ReplayBackend, Script, ScriptRule, ScriptedBackend};
pub use fixtures::{Fixture, FixtureStore};
pub use http::{HttpBackend, HttpConfig, RetryPolicy};
pub use limiter::Limiter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    ColSql,
    ColText,
    RowSql,
    RowText,
    MathClassify,
    ReasonSql,
    ReasonText,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::ColSql,
        Stage::ColText,
        Stage::RowSql,
        Stage::RowText,
        Stage::MathClassify,
        Stage::ReasonSql,
        Stage::ReasonText,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::ColSql => "col_sql",
            Stage::ColText => "col_text",
            Stage::RowSql => "row_sql",
            Stage::RowText => "row_text",
            Stage::MathClassify => "math_classify",
            Stage::ReasonSql => "reason_sql",
            Stage::ReasonText => "reason_text",
        }
    }

    /// Sample-count category; the question classifier belongs to none and
    /// is reported separately.
    pub fn budget_category(self) -> Option<BudgetCategory> {
        match self {
            Stage::ColSql | Stage::ColText => Some(BudgetCategory::ColumnRetrieval),
            Stage::RowSql | Stage::RowText => Some(BudgetCategory::RowRetrieval),
            Stage::ReasonSql | Stage::ReasonText => Some(BudgetCategory::Query),
            Stage::MathClassify => None,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetCategory {
    ColumnRetrieval,
    RowRetrieval,
    Query,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_output_tokens: u32,
    pub n_samples: u32,
}

impl SamplingParams {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(GatewayError::Config(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(GatewayError::Config(format!(
                "top_p {} outside (0, 1]",
                self.top_p
            )));
        }
        if self.max_output_tokens == 0 || self.n_samples == 0 {
            return Err(GatewayError::Config(
                "max_output_tokens and n_samples must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Live,
    Record,
    #[default]
    Replay,
    Scripted,
}

/// One request and its sampled completions.
///
/// Backend, timestamp and latency are kept out of the serialized form so a
/// replayed trace is byte-identical to the recorded one; the run loop
/// writes them to a separate timings log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmExchange {
    pub stage: Stage,
    pub digest: String,
    pub prompt: String,
    pub params: SamplingParams,
    pub completions: Vec<String>,
    #[serde(skip)]
    pub backend: BackendKind,
    #[serde(skip)]
    pub timestamp_ms: u64,
    #[serde(skip)]
    pub latency_ms: u64,
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("no fixture for {stage} prompt (digest {digest})")]
    ReplayMiss { stage: Stage, digest: String },
    #[error("fixture {digest} does not match the requested stage/prompt")]
    FixtureMismatch { digest: String },
    #[error("expected {expected} completions, backend returned {got}")]
    SampleCount { expected: u32, got: usize },
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("fixture store I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed fixture or response: {0}")]
    Malformed(String),
}

impl GatewayError {
    /// Errors that no amount of stage-level fallback can recover from: the
    /// run is misconfigured, so the example is aborted.
    pub fn is_catastrophic(&self) -> bool {
        !matches!(self, GatewayError::Transport { .. })
    }
}

/// Full hex SHA-256 of `stage ‖ 0x00 ‖ prompt`.
pub fn fixture_key(stage: Stage, prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update(stage.as_str().as_bytes());
    h.update([0u8]);
    h.update(prompt.as_bytes());
    hex::encode(h.finalize())
}

/// The 16-hex-digit short form used for fixture file names and messages.
pub fn fixture_digest(stage: Stage, prompt: &str) -> String {
    fixture_key(stage, prompt)[..16].to_string()
}

pub trait CompletionBackend: Send + Sync {
    fn kind(&self) -> BackendKind;

    /// Returns exactly `params.n_samples` completions.
    fn complete(
        &self,
        stage: Stage,
        prompt: &str,
        params: &SamplingParams,
    ) -> Result<Vec<String>, GatewayError>;
}

pub struct Gateway {
    backend: Box<dyn CompletionBackend>,
    limiter: Limiter,
}

impl Gateway {
    pub fn new(backend: Box<dyn CompletionBackend>, max_in_flight: usize) -> Self {
        Gateway {
            backend,
            limiter: Limiter::new(max_in_flight.max(1)),
        }
    }

    pub fn kind(&self) -> BackendKind {
        self.backend.kind()
    }

    pub fn complete(
        &self,
        stage: Stage,
        prompt: &str,
        params: &SamplingParams,
    ) -> Result<LlmExchange, GatewayError> {
        params.validate()?;
        let timestamp_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        let start = Instant::now();
        let completions = {
            let _permit = self.limiter.acquire();
            self.backend.complete(stage, prompt, params)?
        };
        if completions.len() != params.n_samples as usize {
            return Err(GatewayError::SampleCount {
                expected: params.n_samples,
                got: completions.len(),
            });
        }
        Ok(LlmExchange {
            stage,
            digest: fixture_digest(stage, prompt),
            prompt: prompt.to_string(),
            params: *params,
            completions,
            backend: self.backend.kind(),
            timestamp_ms,
            latency_ms: start.elapsed().as_millis() as u64,
        })
    }
}

/// Samples drawn in the column-retrieval, row-retrieval and query
/// categories. Classifier calls are excluded; see [`classifier_calls`].
pub fn generation_budget(exchanges: &[LlmExchange]) -> usize {
    exchanges
        .iter()
        .filter(|e| e.stage.budget_category().is_some())
        .map(|e| e.params.n_samples as usize)
        .sum()
}

pub fn classifier_calls(exchanges: &[LlmExchange]) -> usize {
    exchanges
        .iter()
        .filter(|e| e.stage == Stage::MathClassify)
        .map(|e| e.params.n_samples as usize)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: u32) -> SamplingParams {
        SamplingParams {
            temperature: 0.4,
            top_p: 1.0,
            max_output_tokens: 512,
            n_samples: n,
        }
    }

    fn exchange(stage: Stage, n: u32) -> LlmExchange {
        LlmExchange {
            stage,
            digest: String::new(),
            prompt: String::new(),
            params: params(n),
            completions: vec![String::new(); n as usize],
            backend: BackendKind::Replay,
            timestamp_ms: 0,
            latency_ms: 0,
        }
    }

    #[test]
    fn digest_is_16_hex() {
        let d = fixture_digest(Stage::ColSql, "prompt");
        assert_eq!(d.len(), 16);
        assert!(d.chars().all(|c| c.is_ascii_hexdigit()));
        assert_ne!(d, fixture_digest(Stage::RowSql, "prompt"));
        assert_ne!(d, fixture_digest(Stage::ColSql, "prompt "));
    }

    #[test]
    fn params_bounds() {
        assert!(params(2).validate().is_ok());
        let mut p = params(1);
        p.temperature = 2.5;
        assert!(p.validate().is_err());
        let mut p = params(1);
        p.top_p = 0.0;
        assert!(p.validate().is_err());
        assert!(params(0).validate().is_err());
    }

    #[test]
    fn budget_examples() {
        use Stage::*;
        let extraction = [(ColSql, 2), (ColText, 2), (RowSql, 2), (RowText, 2)];
        let mut math: Vec<LlmExchange> = extraction.iter().map(|&(s, n)| exchange(s, n)).collect();
        math.push(exchange(MathClassify, 1));
        math.push(exchange(ReasonSql, 1));
        math.push(exchange(ReasonText, 1));
        assert_eq!(generation_budget(&math), 10);
        assert_eq!(classifier_calls(&math), 1);

        let mut plain: Vec<LlmExchange> = extraction.iter().map(|&(s, n)| exchange(s, n)).collect();
        plain.push(exchange(MathClassify, 1));
        plain.push(exchange(ReasonText, 1));
        assert_eq!(generation_budget(&plain), 9);

        assert_eq!(generation_budget(&[]), 0);
    }

    #[test]
    fn exchange_serialization_omits_timing() {
        let mut e = exchange(Stage::ColSql, 1);
        e.latency_ms = 99;
        e.backend = BackendKind::Live;
        let json = serde_json::to_string(&e).unwrap();
        assert!(!json.contains("latency"));
        assert!(!json.contains("backend"));
    }
}

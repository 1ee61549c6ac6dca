//! Per-example state shared by the extraction and reasoning stages.

use serde::{Deserialize, Serialize};

use crate::llm::{Gateway, GatewayError, LlmExchange, Stage};
use crate::profile::Profile;
use crate::prompt::{PromptKind, Slots, Templates};
use crate::table::{encode_sql_schema, SqlSchemaEncoding, Table};

/// Recoverable status of one LLM-driven step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageOutcome {
    Ok,
    ParseFailure,
    ExecFailure,
    EmptyFallback,
    GatewayFailure,
    #[default]
    Skipped,
}

impl StageOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            StageOutcome::Ok => "ok",
            StageOutcome::ParseFailure => "parse_failure",
            StageOutcome::ExecFailure => "exec_failure",
            StageOutcome::EmptyFallback => "empty_fallback",
            StageOutcome::GatewayFailure => "gateway_failure",
            StageOutcome::Skipped => "skipped",
        }
    }

    pub fn is_failure(self) -> bool {
        matches!(
            self,
            StageOutcome::ParseFailure | StageOutcome::ExecFailure | StageOutcome::GatewayFailure
        )
    }
}

/// Rows dropped from a SQL-schema prompt to respect the token budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    pub stage: Stage,
    pub rows_included: usize,
    pub rows_total: usize,
}

pub enum Sampled {
    /// Completions and the index of the exchange in the session log.
    Completed { index: usize, completions: Vec<String> },
    /// A transport failure; the stage degrades instead of aborting.
    Failed(String),
}

pub struct Session<'a> {
    gateway: &'a Gateway,
    templates: &'a Templates,
    profile: &'a Profile,
    schema_token_budget: usize,
    exchanges: Vec<LlmExchange>,
}

impl<'a> Session<'a> {
    pub fn new(
        gateway: &'a Gateway,
        templates: &'a Templates,
        profile: &'a Profile,
        schema_token_budget: usize,
    ) -> Self {
        Session {
            gateway,
            templates,
            profile,
            schema_token_budget,
            exchanges: Vec::new(),
        }
    }

    pub fn profile(&self) -> &Profile {
        self.profile
    }

    pub fn schema(&self, t: &Table) -> SqlSchemaEncoding {
        encode_sql_schema(t, self.schema_token_budget)
    }

    pub fn render(&self, kind: PromptKind, slots: &Slots<'_>) -> String {
        let examples = self.profile.get(kind.stage()).examples;
        self.templates.render(kind, examples, slots)
    }

    /// Renders and sends one prompt. Only catastrophic gateway errors are
    /// returned as `Err`.
    pub fn call(&mut self, kind: PromptKind, slots: &Slots<'_>) -> Result<Sampled, GatewayError> {
        let prompt = self.render(kind, slots);
        let stage = kind.stage();
        let params = self.profile.get(stage).params;
        match self.gateway.complete(stage, &prompt, &params) {
            Ok(ex) => {
                let completions = ex.completions.clone();
                self.exchanges.push(ex);
                Ok(Sampled::Completed {
                    index: self.exchanges.len() - 1,
                    completions,
                })
            }
            Err(e) if !e.is_catastrophic() => Ok(Sampled::Failed(e.to_string())),
            Err(e) => Err(e),
        }
    }

    pub fn exchanges(&self) -> &[LlmExchange] {
        &self.exchanges
    }

    pub fn into_exchanges(self) -> Vec<LlmExchange> {
        self.exchanges
    }
}

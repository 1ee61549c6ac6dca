//! Extraction followed by reasoning, for one table and question.

use serde::{Deserialize, Serialize};

use crate::extract::{extract, ExtractionMode, ExtractionTrace};
use crate::llm::{Gateway, GatewayError, LlmExchange};
use crate::profile::{Profile, TaskKind};
use crate::prompt::Templates;
use crate::reason::{default_math_keywords, reason, ReasoningMode, ReasoningTrace};
use crate::session::Session;
use crate::table::Table;

pub const DEFAULT_SCHEMA_TOKEN_BUDGET: usize = 3000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub extraction: ExtractionMode,
    pub reasoning: ReasoningMode,
    pub schema_token_budget: usize,
    pub math_keywords: Vec<String>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            extraction: ExtractionMode::Full,
            reasoning: ReasoningMode::Adaptive,
            schema_token_budget: DEFAULT_SCHEMA_TOKEN_BUDGET,
            math_keywords: default_math_keywords(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub t_cr: Table,
    pub extraction: ExtractionTrace,
    pub reasoning: ReasoningTrace,
    pub exchanges: Vec<LlmExchange>,
}

/// A catastrophic gateway error, with the exchanges completed before it.
#[derive(Debug)]
pub struct PipelineError {
    pub error: GatewayError,
    pub exchanges: Vec<LlmExchange>,
}

impl std::fmt::Display for PipelineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error.fmt(f)
    }
}

impl std::error::Error for PipelineError {}

pub struct Pipeline {
    gateway: Gateway,
    templates: Templates,
    options: PipelineOptions,
}

impl Pipeline {
    pub fn new(gateway: Gateway, templates: Templates, options: PipelineOptions) -> Self {
        Pipeline {
            gateway,
            templates,
            options,
        }
    }

    pub fn options(&self) -> &PipelineOptions {
        &self.options
    }

    pub fn gateway(&self) -> &Gateway {
        &self.gateway
    }

    pub fn run(
        &self,
        table: &Table,
        question: &str,
        task: TaskKind,
        profile: &Profile,
    ) -> Result<PipelineOutput, PipelineError> {
        let mut s = Session::new(
            &self.gateway,
            &self.templates,
            profile,
            self.options.schema_token_budget,
        );
        let staged = extract(&mut s, table, question, self.options.extraction).and_then(
            |(t_cr, extraction)| {
                reason(
                    &mut s,
                    &t_cr,
                    question,
                    task,
                    self.options.reasoning,
                    &self.options.math_keywords,
                )
                .map(|reasoning| (t_cr, extraction, reasoning))
            },
        );
        match staged {
            Ok((t_cr, extraction, reasoning)) => Ok(PipelineOutput {
                t_cr,
                extraction,
                reasoning,
                exchanges: s.into_exchanges(),
            }),
            Err(error) => Err(PipelineError {
                error,
                exchanges: s.into_exchanges(),
            }),
        }
    }
}

//! One scored result per attempted example.

use serde::{Deserialize, Serialize};

use super::dataset::ExampleRecord;
use super::metrics::{exact_match, rouge_all, RougeScores, SizeBucket, Thresholds};
use crate::extract::{CellCounts, ExtractionMode, ExtractionTrace};
use crate::llm::{classifier_calls, generation_budget, LlmExchange};
use crate::pipeline::{PipelineError, PipelineOutput};
use crate::profile::TaskKind;
use crate::reason::{ReasoningMode, ReasoningTrace, Verdict};
use crate::table::{encode_pipe, token_estimate, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Ok,
    Error,
}

/// Only the field matching the task is set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_match: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rouge: Option<RougeScores>,
}

impl Scores {
    pub fn compute(task: TaskKind, prediction: &str, gold: &str) -> Scores {
        match task {
            TaskKind::FactVerification => {
                let p = Verdict::from_text(prediction);
                let g = Verdict::from_text(gold);
                Scores {
                    accuracy: Some(p.is_some() && p != Some(Verdict::Abstain) && p == g),
                    ..Scores::default()
                }
            }
            TaskKind::ShortQa => Scores {
                exact_match: Some(!prediction.trim().is_empty() && exact_match(prediction, gold)),
                ..Scores::default()
            },
            TaskKind::LongQa => Scores {
                rouge: Some(rouge_all(prediction, gold)),
                ..Scores::default()
            },
        }
    }

    /// Accuracy or exact match as 0/1, or ROUGE-L F1.
    pub fn primary(&self) -> f64 {
        if let Some(a) = self.accuracy.or(self.exact_match) {
            return if a { 1.0 } else { 0.0 };
        }
        self.rouge.map(|r| r.rouge_l.f1).unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub index: usize,
    pub id: String,
    pub task: TaskKind,
    pub question: String,
    pub gold: String,
    pub extraction_mode: ExtractionMode,
    pub reasoning_mode: ReasoningMode,
    pub status: RecordStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub prediction: String,
    pub abstained: bool,
    pub scores: Scores,
    /// Token estimate of the pipe-encoded full table.
    pub table_tokens: usize,
    pub bucket: SizeBucket,
    pub cells: CellCounts,
    pub generation_budget: usize,
    pub classifier_calls: usize,
    pub total_generations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extraction: Option<ExtractionTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<ReasoningTrace>,
    pub exchanges: Vec<LlmExchange>,
}

impl EvalRecord {
    pub fn config_label(&self) -> String {
        format!(
            "extraction={} reasoning={}",
            self.extraction_mode, self.reasoning_mode
        )
    }

    pub fn is_error(&self) -> bool {
        self.status == RecordStatus::Error
    }

    /// Builds the record for one example. `table` is `None` when the raw
    /// table could not be loaded.
    pub fn build(
        index: usize,
        ex: &ExampleRecord,
        table: Option<&Table>,
        modes: (ExtractionMode, ReasoningMode),
        thresholds: &Thresholds,
        result: Result<PipelineOutput, PipelineError>,
    ) -> EvalRecord {
        let table_tokens = table.map(|t| token_estimate(&encode_pipe(t))).unwrap_or(0);
        let full_cells = table.map(Table::cell_count).unwrap_or(0);
        let mut rec = EvalRecord {
            index,
            id: ex.id.clone(),
            task: ex.task,
            question: ex.question.clone(),
            gold: ex.gold.clone(),
            extraction_mode: modes.0,
            reasoning_mode: modes.1,
            status: RecordStatus::Ok,
            error: None,
            prediction: String::new(),
            abstained: true,
            scores: Scores::compute(ex.task, "", &ex.gold),
            table_tokens,
            bucket: thresholds.bucket(table_tokens),
            cells: CellCounts {
                t: full_cells,
                t_c: full_cells,
                t_cr: full_cells,
            },
            generation_budget: 0,
            classifier_calls: 0,
            total_generations: 0,
            extraction: None,
            reasoning: None,
            exchanges: Vec::new(),
        };
        let exchanges = match result {
            Ok(out) => {
                let answer = &out.reasoning.answer;
                rec.prediction = answer.prediction().to_string();
                rec.abstained = answer.abstained;
                rec.scores = Scores::compute(ex.task, &rec.prediction, &ex.gold);
                rec.cells = out.extraction.cells;
                rec.extraction = Some(out.extraction);
                rec.reasoning = Some(out.reasoning);
                out.exchanges
            }
            Err(e) => {
                rec.status = RecordStatus::Error;
                rec.error = Some(e.error.to_string());
                e.exchanges
            }
        };
        rec.generation_budget = generation_budget(&exchanges);
        rec.classifier_calls = classifier_calls(&exchanges);
        rec.total_generations = exchanges.iter().map(|x| x.completions.len()).sum();
        rec.exchanges = exchanges;
        rec
    }

    /// Record for an example whose table failed to load.
    pub fn failed(
        index: usize,
        ex: &ExampleRecord,
        modes: (ExtractionMode, ReasoningMode),
        thresholds: &Thresholds,
        error: String,
    ) -> EvalRecord {
        let mut rec = EvalRecord::build(
            index,
            ex,
            None,
            modes,
            thresholds,
            Err(PipelineError {
                error: crate::llm::GatewayError::Malformed(String::new()),
                exchanges: Vec::new(),
            }),
        );
        rec.error = Some(error);
        rec
    }
}

//! Per-stage sampling profiles and the task kinds they are keyed on.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::llm::{SamplingParams, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    FactVerification,
    ShortQa,
    LongQa,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::FactVerification, TaskKind::ShortQa, TaskKind::LongQa];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::FactVerification => "fact_verification",
            TaskKind::ShortQa => "short_qa",
            TaskKind::LongQa => "long_qa",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskKind::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown task {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    #[default]
    Gpt35,
    Palm2,
}

/// Sampling parameters plus the number of few-shot demonstrations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageProfile {
    #[serde(flatten)]
    pub params: SamplingParams,
    pub examples: usize,
}

impl StageProfile {
    const fn new(temperature: f64, max_output_tokens: u32, n_samples: u32, examples: usize) -> Self {
        StageProfile {
            params: SamplingParams {
                temperature,
                top_p: 1.0,
                max_output_tokens,
                n_samples,
            },
            examples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub col_sql: StageProfile,
    pub col_text: StageProfile,
    pub row_sql: StageProfile,
    pub row_text: StageProfile,
    pub math_classify: StageProfile,
    pub reason_sql: StageProfile,
    pub reason_text: StageProfile,
}

impl Profile {
    /// Defaults for a model family and task. Long-form QA shares the
    /// short-answer profile.
    pub fn default_for(family: ModelFamily, task: TaskKind) -> Profile {
        let s = StageProfile::new;
        let math_classify = s(0.0, 8, 1, 4);
        let fact = task == TaskKind::FactVerification;
        match (family, fact) {
            (ModelFamily::Gpt35, false) => Profile {
                col_sql: s(0.3, 512, 2, 3),
                col_text: s(0.4, 512, 2, 2),
                row_sql: s(0.4, 512, 2, 3),
                row_text: s(0.4, 512, 2, 3),
                math_classify,
                reason_sql: s(0.1, 512, 1, 4),
                reason_text: s(0.1, 256, 1, 4),
            },
            (ModelFamily::Gpt35, true) => Profile {
                col_sql: s(0.2, 512, 2, 4),
                col_text: s(0.4, 512, 2, 3),
                row_sql: s(0.4, 512, 2, 4),
                row_text: s(0.5, 512, 2, 3),
                math_classify,
                reason_sql: s(0.1, 512, 1, 4),
                reason_text: s(0.1, 256, 1, 5),
            },
            (ModelFamily::Palm2, false) => Profile {
                col_sql: s(0.4, 512, 2, 3),
                col_text: s(0.7, 512, 2, 3),
                row_sql: s(0.4, 512, 2, 3),
                row_text: s(0.7, 512, 2, 2),
                math_classify,
                reason_sql: s(0.1, 512, 1, 3),
                reason_text: s(0.1, 256, 1, 4),
            },
            (ModelFamily::Palm2, true) => Profile {
                col_sql: s(0.4, 512, 2, 4),
                col_text: s(0.7, 512, 2, 3),
                row_sql: s(0.4, 512, 2, 4),
                row_text: s(0.7, 512, 2, 3),
                math_classify,
                reason_sql: s(0.1, 512, 1, 3),
                reason_text: s(0.1, 256, 1, 5),
            },
        }
    }

    pub fn get(&self, stage: Stage) -> &StageProfile {
        match stage {
            Stage::ColSql => &self.col_sql,
            Stage::ColText => &self.col_text,
            Stage::RowSql => &self.row_sql,
            Stage::RowText => &self.row_text,
            Stage::MathClassify => &self.math_classify,
            Stage::ReasonSql => &self.reason_sql,
            Stage::ReasonText => &self.reason_text,
        }
    }

    pub fn get_mut(&mut self, stage: Stage) -> &mut StageProfile {
        match stage {
            Stage::ColSql => &mut self.col_sql,
            Stage::ColText => &mut self.col_text,
            Stage::RowSql => &mut self.row_sql,
            Stage::RowText => &mut self.row_text,
            Stage::MathClassify => &mut self.math_classify,
            Stage::ReasonSql => &mut self.reason_sql,
            Stage::ReasonText => &mut self.reason_text,
        }
    }

    pub fn validate(&self) -> Result<(), crate::llm::GatewayError> {
        Stage::ALL.iter().try_for_each(|&s| self.get(s).params.validate())
    }

    /// Extraction samples plus query samples, classifier excluded.
    pub fn max_budget(&self) -> u32 {
        [Stage::ColSql, Stage::ColText, Stage::RowSql, Stage::RowText, Stage::ReasonSql, Stage::ReasonText]
            .iter()
            .map(|&s| self.get(s).params.n_samples)
            .sum()
    }
}

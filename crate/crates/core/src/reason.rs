//! Adaptive answer generation over the extracted table.
//!
//! A question judged quantitative first gets a SQL query over the
//! extracted table; its result is handed to the textual step as an extra
//! table. The textual step always produces the final answer, except in the
//! SQL-only ablation where the query result is the answer.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::extract::{run_sql_samples, truncation_note, GeneratedSql, StageNotes};
use crate::llm::{GatewayError, Stage};
use crate::profile::TaskKind;
use crate::prompt::{PromptKind, Slots};
use crate::session::{Sampled, Session, StageOutcome, Truncation};
use crate::sql::{self, ResultSet};
use crate::table::{encode_pipe, Table};

pub const DEFAULT_MATH_KEYWORDS: [&str; 15] = [
    "how many",
    "total",
    "sum",
    "average",
    "difference",
    "most",
    "least",
    "longest",
    "shortest",
    "count",
    "more than",
    "fewer",
    "combined",
    "how long",
    "how much",
];

pub fn default_math_keywords() -> Vec<String> {
    DEFAULT_MATH_KEYWORDS.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReasoningMode {
    #[default]
    Adaptive,
    TextOnly,
    SqlOnly,
}

impl ReasoningMode {
    pub const ALL: [ReasoningMode; 3] = [
        ReasoningMode::Adaptive,
        ReasoningMode::TextOnly,
        ReasoningMode::SqlOnly,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReasoningMode::Adaptive => "adaptive",
            ReasoningMode::TextOnly => "text_only",
            ReasoningMode::SqlOnly => "sql_only",
        }
    }
}

impl fmt::Display for ReasoningMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReasoningMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ReasoningMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown reasoning mode {s:?}"))
    }
}

/// Fact-verification label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Entailed,
    Refuted,
    Abstain,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Entailed => "entailed",
            Verdict::Refuted => "refuted",
            Verdict::Abstain => "abstain",
        }
    }

    /// Maps a textual payload: yes/true/entailed and no/false/refuted.
    pub fn from_text(s: &str) -> Option<Verdict> {
        match first_word(s).as_str() {
            "yes" | "true" | "entailed" => Some(Verdict::Entailed),
            "no" | "false" | "refuted" => Some(Verdict::Refuted),
            _ => None,
        }
    }

    /// Maps a query result cell: 1/true/yes and 0/false/no.
    pub fn from_value(s: &str) -> Option<Verdict> {
        let w = first_word(s);
        match w.as_str() {
            "yes" | "true" => Some(Verdict::Entailed),
            "no" | "false" => Some(Verdict::Refuted),
            _ => match crate::table::parse_numeric(&w) {
                Some(1.0) => Some(Verdict::Entailed),
                Some(0.0) => Some(Verdict::Refuted),
                _ => None,
            },
        }
    }
}

fn first_word(s: &str) -> String {
    s.trim()
        .trim_matches(|c: char| c == '"' || c == '\'' || c == '*')
        .split_whitespace()
        .next()
        .unwrap_or("")
        .trim_end_matches(|c: char| c.is_ascii_punctuation())
        .to_lowercase()
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionSource {
    Model,
    Keywords,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MathDecision {
    pub is_math: bool,
    pub source: DecisionSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exchange: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub outcome: StageOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub query_text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<ResultSet>,
    /// The block inserted into the textual prompt.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rendered: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exchange: Option<usize>,
    pub sql: Vec<GeneratedSql>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<Truncation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Evidence {
    pub fn first_value(&self) -> Option<&str> {
        self.result
            .as_ref()
            .and_then(ResultSet::first_value)
            .map(|v| v.render())
            .filter(|v| !v.is_empty())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerSource {
    Text,
    Sql,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    /// Empty when abstaining.
    pub text: String,
    /// Set for fact verification only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<Verdict>,
    pub abstained: bool,
    pub source: AnswerSource,
    /// Index of the sample the answer came from.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chosen_sample: Option<usize>,
    /// Another sample gave a different parseable answer.
    pub disagreement: bool,
    pub raw_completions: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exchange: Option<usize>,
    pub outcome: StageOutcome,
}

impl Answer {
    fn abstain(task: TaskKind, source: AnswerSource, outcome: StageOutcome) -> Answer {
        Answer {
            text: String::new(),
            label: (task == TaskKind::FactVerification).then_some(Verdict::Abstain),
            abstained: true,
            source,
            chosen_sample: None,
            disagreement: false,
            raw_completions: Vec::new(),
            exchange: None,
            outcome,
        }
    }

    /// The string scored against the gold answer.
    pub fn prediction(&self) -> &str {
        match self.label {
            Some(v) => v.as_str(),
            None => &self.text,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningTrace {
    pub mode: ReasoningMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub math: Option<MathDecision>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evidence: Option<Evidence>,
    pub answer: Answer,
}

/// Whole-word, case-insensitive match of any keyword phrase.
pub fn keyword_math(q: &str, keywords: &[String]) -> bool {
    let hay = q.to_lowercase();
    keywords.iter().any(|k| {
        let k = k.trim().to_lowercase();
        !k.is_empty()
            && hay.match_indices(&k).any(|(i, m)| {
                let before = hay[..i].chars().next_back();
                let after = hay[i + m.len()..].chars().next();
                before.is_none_or(|c| !c.is_alphanumeric()) && after.is_none_or(|c| !c.is_alphanumeric())
            })
    })
}

/// Reads a YES/NO reply; the last non-empty line decides.
pub fn parse_yes_no(text: &str) -> Option<bool> {
    let line = text.lines().rev().find(|l| !l.trim().is_empty())?;
    let payload = line.rsplit(':').next().unwrap_or(line);
    match first_word(payload).as_str() {
        "yes" => Some(true),
        "no" => Some(false),
        _ => None,
    }
}

pub fn classify_math(
    s: &mut Session<'_>,
    q: &str,
    keywords: &[String],
) -> Result<MathDecision, GatewayError> {
    let fallback = |exchange| MathDecision {
        is_math: keyword_math(q, keywords),
        source: DecisionSource::Keywords,
        exchange,
    };
    if q.trim().is_empty() {
        return Ok(fallback(None));
    }
    let reply = s.call(
        PromptKind::MathClassify,
        &Slots {
            question: q,
            ..Default::default()
        },
    )?;
    Ok(match reply {
        Sampled::Completed { index, completions } => {
            match completions.iter().find_map(|c| parse_yes_no(c)) {
                Some(is_math) => MathDecision {
                    is_math,
                    source: DecisionSource::Model,
                    exchange: Some(index),
                },
                None => fallback(Some(index)),
            }
        }
        Sampled::Failed(_) => fallback(None),
    })
}

/// Generates and runs an evidence query over `t_cr`. The first sample that
/// executes is used.
pub fn sql_evidence(s: &mut Session<'_>, t_cr: &Table, q: &str) -> Result<Evidence, GatewayError> {
    let enc = s.schema(t_cr);
    let mut ev = Evidence {
        outcome: StageOutcome::GatewayFailure,
        query_text: None,
        result: None,
        rendered: None,
        exchange: None,
        sql: Vec::new(),
        truncation: truncation_note(Stage::ReasonSql, &enc),
        warnings: Vec::new(),
    };
    let reply = s.call(
        PromptKind::ReasonSql,
        &Slots {
            table: &enc.text,
            question: q,
            ..Default::default()
        },
    )?;
    let completions = match reply {
        Sampled::Completed { index, completions } => {
            ev.exchange = Some(index);
            completions
        }
        Sampled::Failed(msg) => {
            ev.warnings.push(format!("reason_sql: {msg}"));
            return Ok(ev);
        }
    };
    let mut notes = StageNotes::default();
    let (results, outcome) = run_sql_samples(Stage::ReasonSql, &completions, &mut notes, |ast| {
        sql::execute(ast, t_cr)
    });
    ev.sql = notes.sql;
    ev.outcome = outcome;
    if let Some(rs) = results.into_iter().next() {
        ev.query_text = ev.sql.iter().find(|g| g.error.is_none()).and_then(|g| g.query.clone());
        match rs.to_table() {
            Ok(table) => ev.rendered = Some(format!("SQL evidence:\n{}\n", encode_pipe(&table))),
            Err(e) => {
                ev.outcome = StageOutcome::ExecFailure;
                ev.warnings.push(format!("reason_sql: result not renderable: {e}"));
            }
        }
        ev.result = Some(rs);
    }
    Ok(ev)
}

/// The payload of the last `Answer:` line, if non-empty.
pub fn parse_answer_line(text: &str) -> Option<String> {
    text.lines().rev().find_map(|line| {
        let t = line.trim().trim_start_matches(['*', '#', ' ']);
        let head = t.get(..7)?;
        if !head.eq_ignore_ascii_case("answer:") {
            return None;
        }
        Some(t[7..].trim().trim_start_matches('*').trim().to_string())
    })
    .filter(|a| !a.is_empty())
}

pub fn text_answer(
    s: &mut Session<'_>,
    t_cr: &Table,
    q: &str,
    ev: Option<&Evidence>,
    task: TaskKind,
) -> Result<Answer, GatewayError> {
    let pipe = encode_pipe(t_cr);
    let evidence = ev
        .filter(|e| e.outcome == StageOutcome::Ok)
        .and_then(|e| e.rendered.as_deref())
        .unwrap_or("");
    let reply = s.call(
        PromptKind::ReasonText(task),
        &Slots {
            table: &pipe,
            question: q,
            evidence,
            ..Default::default()
        },
    )?;
    let (index, completions) = match reply {
        Sampled::Completed { index, completions } => (index, completions),
        Sampled::Failed(_) => {
            return Ok(Answer::abstain(task, AnswerSource::Text, StageOutcome::GatewayFailure))
        }
    };
    let parsed: Vec<(usize, String, Option<Verdict>)> = completions
        .iter()
        .enumerate()
        .filter_map(|(i, c)| {
            let payload = parse_answer_line(c)?;
            if task == TaskKind::FactVerification {
                let v = Verdict::from_text(&payload)?;
                Some((i, payload, Some(v)))
            } else {
                Some((i, payload, None))
            }
        })
        .collect();
    let mut answer = match parsed.first() {
        Some((i, text, label)) => Answer {
            text: text.clone(),
            label: *label,
            abstained: false,
            source: AnswerSource::Text,
            chosen_sample: Some(*i),
            disagreement: parsed
                .iter()
                .any(|(_, t, l)| if label.is_some() { l != label } else { t != text }),
            raw_completions: Vec::new(),
            exchange: None,
            outcome: StageOutcome::Ok,
        },
        None => Answer::abstain(task, AnswerSource::Text, StageOutcome::ParseFailure),
    };
    answer.raw_completions = completions;
    answer.exchange = Some(index);
    Ok(answer)
}

fn answer_from_evidence(ev: &Evidence, task: TaskKind) -> Answer {
    let value = (ev.outcome == StageOutcome::Ok)
        .then(|| ev.first_value())
        .flatten();
    let outcome = if ev.outcome == StageOutcome::Ok {
        StageOutcome::EmptyFallback
    } else {
        ev.outcome
    };
    let Some(value) = value else {
        return Answer {
            exchange: ev.exchange,
            ..Answer::abstain(task, AnswerSource::Sql, outcome)
        };
    };
    let label = match task {
        TaskKind::FactVerification => Some(Verdict::from_value(value).unwrap_or(Verdict::Abstain)),
        _ => None,
    };
    Answer {
        text: value.to_string(),
        label,
        abstained: label == Some(Verdict::Abstain),
        source: AnswerSource::Sql,
        chosen_sample: None,
        disagreement: false,
        raw_completions: Vec::new(),
        exchange: ev.exchange,
        outcome: StageOutcome::Ok,
    }
}

pub fn reason(
    s: &mut Session<'_>,
    t_cr: &Table,
    q: &str,
    task: TaskKind,
    mode: ReasoningMode,
    keywords: &[String],
) -> Result<ReasoningTrace, GatewayError> {
    match mode {
        ReasoningMode::Adaptive => {
            let math = classify_math(s, q, keywords)?;
            let evidence = if math.is_math {
                Some(sql_evidence(s, t_cr, q)?)
            } else {
                None
            };
            let answer = text_answer(s, t_cr, q, evidence.as_ref(), task)?;
            Ok(ReasoningTrace {
                mode,
                math: Some(math),
                evidence,
                answer,
            })
        }
        ReasoningMode::TextOnly => Ok(ReasoningTrace {
            mode,
            math: None,
            evidence: None,
            answer: text_answer(s, t_cr, q, None, task)?,
        }),
        ReasoningMode::SqlOnly => {
            let ev = sql_evidence(s, t_cr, q)?;
            let answer = answer_from_evidence(&ev, task);
            Ok(ReasoningTrace {
                mode,
                math: None,
                evidence: Some(ev),
                answer,
            })
        }
    }
}

//! Aggregates over a set of records. Recomputing from the same records
//! always produces the same report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{cell_reduction_stats, CellStats, SizeBucket};
use super::record::EvalRecord;
use crate::profile::TaskKind;
use crate::session::StageOutcome;

pub const REPORT_NOTES: [&str; 3] = [
    "table size: sum over whitespace runs of ceil(chars / 8) on the pipe encoding; a tokenizer-free proxy",
    "rouge: F-measure with beta = 1 on lowercased alphanumeric tokens, no stemming",
    "generation budget: column, row and query samples; math classifier calls are counted separately",
];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub examples: usize,
    pub errors: usize,
    pub abstentions: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_match: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rouge1_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rouge2_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rouge_l_f1: Option<f64>,
    pub disagreements: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BucketRow {
    pub examples: usize,
    /// Mean primary score; absent for an empty bucket.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub notes: Vec<String>,
    pub examples: usize,
    pub errors: usize,
    pub configurations: BTreeMap<String, usize>,
    pub tasks: BTreeMap<TaskKind, TaskMetrics>,
    /// Always all three buckets per task.
    pub buckets: BTreeMap<TaskKind, BTreeMap<SizeBucket, BucketRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<CellStats>,
    pub cells_by_task: BTreeMap<TaskKind, CellStats>,
    /// stage name -> outcome -> count, over successful records.
    pub stage_outcomes: BTreeMap<String, BTreeMap<StageOutcome, usize>>,
    /// generation budget -> number of records.
    pub budget_histogram: BTreeMap<usize, usize>,
    pub classifier_calls: usize,
    pub error_messages: BTreeMap<String, usize>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut n, mut sum) = (0usize, 0.0);
    for x in xs {
        n += 1;
        sum += x;
    }
    (n > 0).then(|| sum / n as f64)
}

fn bump<K: Ord>(m: &mut BTreeMap<K, usize>, k: K) {
    *m.entry(k).or_insert(0) += 1;
}

impl RunReport {
    /// Records are read in index order, so completion order does not
    /// affect floating-point sums.
    pub fn compute(records: &[EvalRecord]) -> RunReport {
        let mut sorted: Vec<&EvalRecord> = records.iter().collect();
        sorted.sort_by_key(|r| r.index);
        let mut rep = RunReport {
            notes: REPORT_NOTES.iter().map(|s| s.to_string()).collect(),
            examples: sorted.len(),
            errors: sorted.iter().filter(|r| r.is_error()).count(),
            ..RunReport::default()
        };
        for r in &sorted {
            bump(&mut rep.configurations, r.config_label());
            rep.classifier_calls += r.classifier_calls;
            bump(&mut rep.budget_histogram, r.generation_budget);
            if let Some(e) = &r.error {
                bump(&mut rep.error_messages, e.clone());
            }
            if let Some(x) = &r.extraction {
                for (name, o) in x.outcomes.named() {
                    bump(rep.stage_outcomes.entry(name.to_string()).or_default(), o);
                }
            }
            if let Some(rt) = &r.reasoning {
                if let Some(ev) = &rt.evidence {
                    bump(rep.stage_outcomes.entry("reason_sql".into()).or_default(), ev.outcome);
                }
                bump(
                    rep.stage_outcomes.entry("reason_answer".into()).or_default(),
                    rt.answer.outcome,
                );
            }
        }
        let mut tasks: Vec<TaskKind> = sorted.iter().map(|r| r.task).collect();
        tasks.sort();
        tasks.dedup();
        for task in tasks {
            let rs: Vec<&EvalRecord> = sorted.iter().copied().filter(|r| r.task == task).collect();
            let mut m = TaskMetrics {
                examples: rs.len(),
                errors: rs.iter().filter(|r| r.is_error()).count(),
                abstentions: rs.iter().filter(|r| r.abstained).count(),
                disagreements: rs
                    .iter()
                    .filter(|r| r.reasoning.as_ref().is_some_and(|t| t.answer.disagreement))
                    .count(),
                ..TaskMetrics::default()
            };
            let flag = |b: Option<bool>| if b == Some(true) { 1.0 } else { 0.0 };
            match task {
                TaskKind::FactVerification => {
                    m.accuracy = mean(rs.iter().map(|r| flag(r.scores.accuracy)));
                }
                TaskKind::ShortQa => {
                    m.exact_match = mean(rs.iter().map(|r| flag(r.scores.exact_match)));
                }
                TaskKind::LongQa => {
                    let rouge = |f: fn(&super::metrics::RougeScores) -> f64| {
                        mean(rs.iter().map(|r| r.scores.rouge.as_ref().map(f).unwrap_or(0.0)))
                    };
                    m.rouge1_f1 = rouge(|s| s.rouge1.f1);
                    m.rouge2_f1 = rouge(|s| s.rouge2.f1);
                    m.rouge_l_f1 = rouge(|s| s.rouge_l.f1);
                }
            }
            rep.tasks.insert(task, m);
            let rows = SizeBucket::ALL
                .into_iter()
                .map(|b| {
                    let in_b: Vec<&&EvalRecord> = rs.iter().filter(|r| r.bucket == b).collect();
                    let row = BucketRow {
                        examples: in_b.len(),
                        score: mean(in_b.iter().map(|r| r.scores.primary())),
                    };
                    (b, row)
                })
                .collect();
            rep.buckets.insert(task, rows);
            let ok: Vec<&EvalRecord> = rs.iter().copied().filter(|r| !r.is_error()).collect();
            if let Ok(s) = cell_reduction_stats(ok.iter().map(|r| &r.cells)) {
                rep.cells_by_task.insert(task, s);
            }
        }
        rep.cells = cell_reduction_stats(sorted.iter().filter(|r| !r.is_error()).map(|r| &r.cells)).ok();
        rep
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Plain-text rendering for terminals.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "examples: {}  errors: {}", self.examples, self.errors);
        for (label, n) in &self.configurations {
            let _ = writeln!(out, "configuration: {label} ({n})");
        }
        let fmt = |x: Option<f64>| x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
        for (task, m) in &self.tasks {
            let _ = writeln!(out, "\n[{task}] {} examples, {} errors, {} abstentions", m.examples, m.errors, m.abstentions);
            for (name, v) in [
                ("accuracy", m.accuracy),
                ("exact_match", m.exact_match),
                ("rouge1_f1", m.rouge1_f1),
                ("rouge2_f1", m.rouge2_f1),
                ("rouge_l_f1", m.rouge_l_f1),
            ] {
                if v.is_some() {
                    let _ = writeln!(out, "  {name:<12} {}", fmt(v));
                }
            }
            if let Some(rows) = self.buckets.get(task) {
                let _ = writeln!(out, "  {:<8} {:>8} {:>8}", "size", "examples", "score");
                for (b, row) in rows {
                    let _ = writeln!(out, "  {:<8} {:>8} {:>8}", b.as_str(), row.examples, fmt(row.score));
                }
            }
        }
        let _ = writeln!(out, "\naverage cells {:>10} {:>10} {:>10}", "T", "T_C", "T_CR");
        let mut cell_row = |label: &str, s: &CellStats| {
            let _ = writeln!(
                out,
                "  {label:<19} {:>10.2} {:>10.2} {:>10.2}",
                s.avg_t, s.avg_t_c, s.avg_t_cr
            );
        };
        if let Some(s) = &self.cells {
            cell_row("all", s);
        }
        for (task, s) in &self.cells_by_task {
            cell_row(task.as_str(), s);
        }
        let _ = writeln!(out, "\ngeneration budget");
        for (b, n) in &self.budget_histogram {
            let _ = writeln!(out, "  {b:>3}: {n}");
        }
        let _ = writeln!(out, "classifier calls: {}", self.classifier_calls);
        let _ = writeln!(out, "\nstage outcomes");
        for (stage, counts) in &self.stage_outcomes {
            let line: Vec<String> = counts.iter().map(|(o, n)| format!("{}={n}", o.as_str())).collect();
            let _ = writeln!(out, "  {stage:<14} {}", line.join(" "));
        }
        if !self.error_messages.is_empty() {
            let _ = writeln!(out, "\nerrors");
            for (e, n) in &self.error_messages {
                let _ = writeln!(out, "  {n} x {e}");
            }
        }
        let _ = writeln!(out, "\nnotes");
        for n in &self.notes {
            let _ = writeln!(out, "  - {n}");
        }
        out
    }
}

//! Question-specific table extraction.
//!
//! Columns are chosen first, by a generated SQL query over the full table
//! and then by a textual check over the transposed table; rows are then
//! chosen the same way over the column-filtered table. Each step unions
//! the selections of every sample and of both views, and an empty union
//! falls back to keeping everything.

pub mod parse;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::llm::{GatewayError, Stage};
use crate::prompt::{PromptKind, Slots};
use crate::session::{Sampled, Session, StageOutcome, Truncation};
use crate::sql::{self, Query, SqlError};
use crate::table::{encode_pipe, python_list, ColumnSet, RowIdSet, Table};

pub use parse::{extract_sql, parse_list_line, parse_row_ref};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionMode {
    #[default]
    Full,
    NoColumn,
    NoRow,
    None,
}

impl ExtractionMode {
    pub const ALL: [ExtractionMode; 4] = [
        ExtractionMode::Full,
        ExtractionMode::NoColumn,
        ExtractionMode::NoRow,
        ExtractionMode::None,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExtractionMode::Full => "full",
            ExtractionMode::NoColumn => "no_column",
            ExtractionMode::NoRow => "no_row",
            ExtractionMode::None => "none",
        }
    }

    pub fn selects_columns(self) -> bool {
        matches!(self, ExtractionMode::Full | ExtractionMode::NoRow)
    }

    pub fn selects_rows(self) -> bool {
        matches!(self, ExtractionMode::Full | ExtractionMode::NoColumn)
    }
}

impl fmt::Display for ExtractionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExtractionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExtractionMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown extraction mode {s:?}"))
    }
}

/// What one SQL sample produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedSql {
    pub stage: Stage,
    pub sample: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageNotes {
    pub exchange: Option<usize>,
    pub sql: Vec<GeneratedSql>,
    pub warnings: Vec<String>,
    pub truncation: Option<Truncation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageResult<T> {
    pub value: T,
    pub outcome: StageOutcome,
    pub notes: StageNotes,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageOutcomes {
    pub col_sql: StageOutcome,
    pub col_text: StageOutcome,
    pub column_merge: StageOutcome,
    pub row_sql: StageOutcome,
    pub row_text: StageOutcome,
    pub row_merge: StageOutcome,
}

impl StageOutcomes {
    pub fn named(&self) -> [(&'static str, StageOutcome); 6] {
        [
            ("col_sql", self.col_sql),
            ("col_text", self.col_text),
            ("column_merge", self.column_merge),
            ("row_sql", self.row_sql),
            ("row_text", self.row_text),
            ("row_merge", self.row_merge),
        ]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub t: usize,
    pub t_c: usize,
    pub t_cr: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractionTrace {
    pub question: String,
    pub mode: ExtractionMode,
    pub c1: ColumnSet,
    pub c2: ColumnSet,
    pub c_final: ColumnSet,
    pub r1: RowIdSet,
    pub r2: RowIdSet,
    pub r_final: RowIdSet,
    pub outcomes: StageOutcomes,
    pub cells: CellCounts,
    pub exchanges: Vec<usize>,
    pub sql: Vec<GeneratedSql>,
    pub truncations: Vec<Truncation>,
    pub warnings: Vec<String>,
}

impl ExtractionTrace {
    fn absorb(&mut self, notes: StageNotes) {
        self.exchanges.extend(notes.exchange);
        self.sql.extend(notes.sql);
        self.warnings.extend(notes.warnings);
        self.truncations.extend(notes.truncation);
    }
}

pub(crate) fn truncation_note(stage: Stage, enc: &crate::table::SqlSchemaEncoding) -> Option<Truncation> {
    enc.truncated().then_some(Truncation {
        stage,
        rows_included: enc.rows_included,
        rows_total: enc.rows_total,
    })
}

/// Runs `eval` over the SQL found in each completion. Returns the values of
/// the samples that succeeded and the combined outcome: `Ok` if any sample
/// succeeded, else `ExecFailure` if any query parsed, else `ParseFailure`.
pub(crate) fn run_sql_samples<T>(
    stage: Stage,
    completions: &[String],
    notes: &mut StageNotes,
    mut eval: impl FnMut(&Query) -> Result<T, SqlError>,
) -> (Vec<T>, StageOutcome) {
    let mut values = Vec::new();
    let mut any_parsed = false;
    for (sample, text) in completions.iter().enumerate() {
        let Some(query) = extract_sql(text) else {
            notes.sql.push(GeneratedSql {
                stage,
                sample,
                query: None,
                error: Some("no SQL statement found".into()),
            });
            continue;
        };
        let result = sql::parse_query(&query).and_then(|ast| {
            any_parsed = true;
            eval(&ast)
        });
        let error = match result {
            Ok(v) => {
                values.push(v);
                None
            }
            Err(e) => Some(e.to_string()),
        };
        notes.sql.push(GeneratedSql {
            stage,
            sample,
            query: Some(query),
            error,
        });
    }
    let outcome = if !values.is_empty() {
        StageOutcome::Ok
    } else if any_parsed {
        StageOutcome::ExecFailure
    } else {
        StageOutcome::ParseFailure
    };
    (values, outcome)
}

fn sampled<T: Default>(
    s: Sampled,
    stage: Stage,
    notes: &mut StageNotes,
) -> Result<(usize, Vec<String>), StageResult<T>> {
    match s {
        Sampled::Completed { index, completions } => {
            notes.exchange = Some(index);
            Ok((index, completions))
        }
        Sampled::Failed(msg) => {
            notes.warnings.push(format!("{stage}: {msg}"));
            Err(StageResult {
                value: T::default(),
                outcome: StageOutcome::GatewayFailure,
                notes: std::mem::take(notes),
            })
        }
    }
}

/// Columns referenced by a generated query over the full table.
pub fn col_sql(s: &mut Session<'_>, t: &Table, q: &str) -> Result<StageResult<ColumnSet>, GatewayError> {
    let enc = s.schema(t);
    let mut notes = StageNotes {
        truncation: truncation_note(Stage::ColSql, &enc),
        ..Default::default()
    };
    let reply = s.call(
        PromptKind::ColSql,
        &Slots {
            table: &enc.text,
            question: q,
            ..Default::default()
        },
    )?;
    let (_, completions) = match sampled(reply, Stage::ColSql, &mut notes) {
        Ok(v) => v,
        Err(r) => return Ok(r),
    };
    let (sets, outcome) = run_sql_samples(Stage::ColSql, &completions, &mut notes, |ast| {
        sql::referenced_columns(ast, t)
    });
    let value = sets
        .iter()
        .fold(ColumnSet::default(), |acc, c| t.union_columns(&acc, c));
    Ok(StageResult { value, outcome, notes })
}

/// Columns named by a textual check over the transposed table. Names are
/// matched against the original columns, i.e. the first cell of each
/// transposed row; anything else is dropped with a warning.
pub fn col_text(
    s: &mut Session<'_>,
    transposed: &Table,
    q: &str,
    c1: &ColumnSet,
) -> Result<StageResult<ColumnSet>, GatewayError> {
    let original: Vec<String> = transposed
        .rows()
        .iter()
        .filter_map(|r| r.cells.first().map(|c| c.render().to_string()))
        .collect();
    let index = Table::new(None, original, Vec::new()).map_err(|e| {
        GatewayError::Config(format!("transposed table has duplicate column names: {e}"))
    })?;
    let pipe = encode_pipe(transposed);
    let prior = format!("columns selected by SQL: {}", python_list(c1.names()));
    let mut notes = StageNotes::default();
    let reply = s.call(
        PromptKind::ColText,
        &Slots {
            table: &pipe,
            question: q,
            prior_selection: &prior,
            ..Default::default()
        },
    )?;
    let (_, completions) = match sampled(reply, Stage::ColText, &mut notes) {
        Ok(v) => v,
        Err(r) => return Ok(r),
    };
    let mut value = ColumnSet::default();
    let mut parsed = false;
    for (i, text) in completions.iter().enumerate() {
        let Some(names) = parse_list_line(text, "columns") else {
            notes
                .warnings
                .push(format!("col_text sample {i}: no columns line"));
            continue;
        };
        parsed = true;
        let (set, rejected) = index.select_columns(&names);
        for r in rejected {
            notes
                .warnings
                .push(format!("col_text sample {i}: dropped unknown column {r:?}"));
        }
        value = index.union_columns(&value, &set);
    }
    let outcome = if parsed {
        StageOutcome::Ok
    } else {
        StageOutcome::ParseFailure
    };
    Ok(StageResult { value, outcome, notes })
}

/// Rows that contributed to a generated query's result over `t_c`.
pub fn row_sql(s: &mut Session<'_>, t_c: &Table, q: &str) -> Result<StageResult<RowIdSet>, GatewayError> {
    let enc = s.schema(t_c);
    let mut notes = StageNotes {
        truncation: truncation_note(Stage::RowSql, &enc),
        ..Default::default()
    };
    let reply = s.call(
        PromptKind::RowSql,
        &Slots {
            table: &enc.text,
            question: q,
            ..Default::default()
        },
    )?;
    let (_, completions) = match sampled(reply, Stage::RowSql, &mut notes) {
        Ok(v) => v,
        Err(r) => return Ok(r),
    };
    let (sets, outcome) = run_sql_samples(Stage::RowSql, &completions, &mut notes, |ast| {
        sql::execute(ast, t_c).map(|rs| sql::result_row_ids(&rs))
    });
    let value = sets.iter().fold(RowIdSet::default(), |acc, r| acc.union(r));
    Ok(StageResult { value, outcome, notes })
}

/// Rows named by a textual check over `t_c`; ids absent from `t_c` are
/// dropped with a warning.
pub fn row_text(
    s: &mut Session<'_>,
    t_c: &Table,
    q: &str,
    r1: &RowIdSet,
) -> Result<StageResult<RowIdSet>, GatewayError> {
    let pipe = encode_pipe(t_c);
    let prior = format!("rows selected by SQL: {r1}");
    let mut notes = StageNotes::default();
    let reply = s.call(
        PromptKind::RowText,
        &Slots {
            table: &pipe,
            question: q,
            prior_selection: &prior,
            ..Default::default()
        },
    )?;
    let (_, completions) = match sampled(reply, Stage::RowText, &mut notes) {
        Ok(v) => v,
        Err(r) => return Ok(r),
    };
    let valid = t_c.row_ids();
    let mut value = RowIdSet::default();
    let mut parsed = false;
    for (i, text) in completions.iter().enumerate() {
        let Some(items) = parse_list_line(text, "rows") else {
            notes.warnings.push(format!("row_text sample {i}: no rows line"));
            continue;
        };
        parsed = true;
        for item in items {
            match parse_row_ref(&item) {
                Some(id) if valid.contains(id) => value.insert(id),
                _ => notes
                    .warnings
                    .push(format!("row_text sample {i}: dropped unknown row {item:?}")),
            }
        }
    }
    let outcome = if parsed {
        StageOutcome::Ok
    } else {
        StageOutcome::ParseFailure
    };
    Ok(StageResult { value, outcome, notes })
}

/// Produces the extracted table and its trace. Only catastrophic gateway
/// errors escape; every model-output failure is absorbed as an outcome.
pub fn extract(
    s: &mut Session<'_>,
    t: &Table,
    q: &str,
    mode: ExtractionMode,
) -> Result<(Table, ExtractionTrace), GatewayError> {
    let mut trace = ExtractionTrace {
        question: q.to_string(),
        mode,
        ..Default::default()
    };
    trace.cells.t = t.cell_count();

    let t_c = if mode.selects_columns() && t.num_columns() > 0 {
        let c1 = col_sql(s, t, q)?;
        trace.outcomes.col_sql = c1.outcome;
        trace.c1 = c1.value;
        trace.absorb(c1.notes);

        let c2 = col_text(s, &t.transpose(), q, &trace.c1)?;
        trace.outcomes.col_text = c2.outcome;
        trace.c2 = c2.value;
        trace.absorb(c2.notes);

        let merged = t.union_columns(&trace.c1, &trace.c2);
        if merged.is_empty() {
            trace.outcomes.column_merge = StageOutcome::EmptyFallback;
            trace.c_final = t.all_columns();
        } else {
            trace.outcomes.column_merge = StageOutcome::Ok;
            trace.c_final = merged;
        }
        t.filter_columns(&trace.c_final)
            .expect("selection is drawn from the table's own columns")
    } else {
        trace.c_final = t.all_columns();
        t.clone()
    };
    trace.cells.t_c = t_c.cell_count();

    let t_cr = if mode.selects_rows() && t_c.num_rows() > 0 && t_c.num_columns() > 0 {
        let r1 = row_sql(s, &t_c, q)?;
        trace.outcomes.row_sql = r1.outcome;
        trace.r1 = r1.value;
        trace.absorb(r1.notes);

        let r2 = row_text(s, &t_c, q, &trace.r1)?;
        trace.outcomes.row_text = r2.outcome;
        trace.r2 = r2.value;
        trace.absorb(r2.notes);

        let merged = trace.r1.union(&trace.r2);
        if merged.is_empty() {
            trace.outcomes.row_merge = StageOutcome::EmptyFallback;
            trace.r_final = t_c.row_ids();
        } else {
            trace.outcomes.row_merge = StageOutcome::Ok;
            trace.r_final = merged;
        }
        t_c.filter_rows(&trace.r_final)
            .expect("selection is drawn from the table's own row ids")
    } else {
        trace.r_final = t_c.row_ids();
        t_c.clone()
    };
    trace.cells.t_cr = t_cr.cell_count();
    Ok((t_cr, trace))
}

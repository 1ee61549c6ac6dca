//! JSONL dataset loading: a neutral schema plus thin adapters for the
//! common benchmark layouts.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::profile::TaskKind;
use crate::reason::Verdict;
use crate::table::{RawTable, Table};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    #[default]
    Neutral,
    Tabfact,
    Wikitq,
    Fetaqa,
}

impl DatasetFormat {
    pub const ALL: [DatasetFormat; 4] = [
        DatasetFormat::Neutral,
        DatasetFormat::Tabfact,
        DatasetFormat::Wikitq,
        DatasetFormat::Fetaqa,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetFormat::Neutral => "neutral",
            DatasetFormat::Tabfact => "tabfact",
            DatasetFormat::Wikitq => "wikitq",
            DatasetFormat::Fetaqa => "fetaqa",
        }
    }
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DatasetFormat::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown dataset format {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub id: String,
    pub task: TaskKind,
    pub table: RawTable,
    pub question: String,
    /// For fact verification, `entailed` or `refuted`.
    pub gold: String,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub metadata: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reject {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub examples: Vec<ExampleRecord>,
    pub rejects: Vec<Reject>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read dataset {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{rejected} of {total} dataset lines rejected; first: line {first_line}: {first_reason}")]
    TooManyRejects {
        rejected: usize,
        total: usize,
        first_line: usize,
        first_reason: String,
    },
}

pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<Dataset, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&text, format)
}

/// Parses JSONL text. Blank lines are skipped; invalid lines become
/// rejects, and more than half rejected is an error.
pub fn parse_dataset(text: &str, format: DatasetFormat) -> Result<Dataset, DatasetError> {
    let mut ds = Dataset::default();
    let mut total = 0;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        let line_no = i + 1;
        match parse_line(line, line_no, format).and_then(validate) {
            Ok(ex) => ds.examples.push(ex),
            Err(reason) => ds.rejects.push(Reject {
                line: line_no,
                reason,
            }),
        }
    }
    if ds.rejects.len() * 2 > total {
        let first = &ds.rejects[0];
        return Err(DatasetError::TooManyRejects {
            rejected: ds.rejects.len(),
            total,
            first_line: first.line,
            first_reason: first.reason.clone(),
        });
    }
    Ok(ds)
}

fn validate(mut ex: ExampleRecord) -> Result<ExampleRecord, String> {
    if ex.question.trim().is_empty() {
        return Err("empty question".into());
    }
    Table::load(&ex.table).map_err(|e| format!("bad table: {e}"))?;
    if ex.task == TaskKind::FactVerification {
        let label = match ex.gold.trim().to_lowercase().as_str() {
            "1" => Verdict::Entailed,
            "0" => Verdict::Refuted,
            other => match Verdict::from_text(other) {
                Some(v) if v != Verdict::Abstain => v,
                _ => return Err(format!("fact-verification gold {:?} is not a label", ex.gold)),
            },
        };
        ex.gold = label.as_str().to_string();
    }
    Ok(ex)
}

fn parse_line(line: &str, line_no: usize, format: DatasetFormat) -> Result<ExampleRecord, String> {
    if format == DatasetFormat::Neutral {
        return serde_json::from_str(line).map_err(|e| e.to_string());
    }
    let v: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let obj = v.as_object().ok_or("line is not a JSON object")?;
    let id = obj
        .get("id")
        .or_else(|| obj.get("feta_id"))
        .or_else(|| obj.get("table_id"))
        .map(scalar_string)
        .unwrap_or_else(|| format!("line-{line_no}"));
    match format {
        DatasetFormat::Tabfact => {
            let grid = string_grid(obj.get("table_text").ok_or("missing field `table_text`")?)?;
            Ok(ExampleRecord {
                id,
                task: TaskKind::FactVerification,
                table: grid_table(grid, str_field(obj, "table_caption").or_else(|| str_field(obj, "caption")))?,
                question: str_field(obj, "statement").ok_or("missing field `statement`")?,
                gold: obj
                    .get("label")
                    .map(scalar_string)
                    .ok_or("missing field `label`")?,
                metadata: Map::new(),
            })
        }
        DatasetFormat::Wikitq => {
            let table = obj.get("table").ok_or("missing field `table`")?;
            let header = table
                .get("header")
                .map(string_list)
                .transpose()?
                .ok_or("missing field `table.header`")?;
            let rows = string_grid(table.get("rows").ok_or("missing field `table.rows`")?)?;
            let gold = match obj.get("answers") {
                Some(Value::Array(a)) => a.iter().map(scalar_string).collect::<Vec<_>>().join("|"),
                Some(other) => scalar_string(other),
                None => str_field(obj, "answer").ok_or("missing field `answers`")?,
            };
            Ok(ExampleRecord {
                id,
                task: TaskKind::ShortQa,
                table: RawTable {
                    caption: table
                        .get("caption")
                        .or_else(|| table.get("name"))
                        .and_then(Value::as_str)
                        .map(str::to_string),
                    header,
                    rows,
                },
                question: str_field(obj, "question").ok_or("missing field `question`")?,
                gold,
                metadata: Map::new(),
            })
        }
        DatasetFormat::Fetaqa => {
            let grid = string_grid(obj.get("table_array").ok_or("missing field `table_array`")?)?;
            let caption = match (
                str_field(obj, "table_page_title"),
                str_field(obj, "table_section_title"),
            ) {
                (Some(p), Some(s)) if !s.is_empty() => Some(format!("{p} - {s}")),
                (p, _) => p,
            };
            Ok(ExampleRecord {
                id,
                task: TaskKind::LongQa,
                table: grid_table(grid, caption)?,
                question: str_field(obj, "question").ok_or("missing field `question`")?,
                gold: str_field(obj, "answer").ok_or("missing field `answer`")?,
                metadata: Map::new(),
            })
        }
        DatasetFormat::Neutral => unreachable!(),
    }
}

fn str_field(obj: &Map<String, Value>, key: &str) -> Option<String> {
    obj.get(key).and_then(Value::as_str).map(str::to_string)
}

fn scalar_string(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn string_list(v: &Value) -> Result<Vec<String>, String> {
    v.as_array()
        .ok_or_else(|| "expected an array".to_string())
        .map(|a| a.iter().map(scalar_string).collect())
}

fn string_grid(v: &Value) -> Result<Vec<Vec<String>>, String> {
    v.as_array()
        .ok_or("expected an array of rows")?
        .iter()
        .map(string_list)
        .collect()
}

fn grid_table(mut grid: Vec<Vec<String>>, caption: Option<String>) -> Result<RawTable, String> {
    if grid.is_empty() {
        return Err("table has no header row".into());
    }
    let header = grid.remove(0);
    Ok(RawTable {
        caption,
        header,
        rows: grid,
    })
}

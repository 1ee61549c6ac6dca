//! In-memory tables with stable row identifiers.
//!
//! A [`Table`] is immutable once built. Filtering returns a new table and
//! keeps the original `row_id` of every surviving row, so ids produced by one
//! stage stay meaningful in the next.

mod cell;
mod encode;

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cell::{format_number, parse_numeric, CellValue};
pub use encode::{
    encode_pipe, encode_sql_schema, parse_pipe, python_list, token_estimate, ParsedPipe,
    SqlSchemaEncoding,
};

/// Name of the implicit identifier column exposed to queries and prompts.
pub const ROW_ID: &str = "row_id";

/// Leading header of a transposed table.
pub const TRANSPOSED_LABEL: &str = "column";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TableError {
    #[error("row {row} has {found} cells, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("unknown column(s) {unknown:?}; valid columns are {valid:?}")]
    UnknownColumns {
        unknown: Vec<String>,
        valid: Vec<String>,
    },
    #[error("unknown row id(s) {unknown:?}")]
    UnknownRows { unknown: Vec<u32> },
    #[error("selection is empty")]
    EmptySelection,
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
    #[error("duplicate row id {0}")]
    DuplicateRowId(u32),
    #[error("malformed encoding at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

/// The tabular source record: a header, a grid of string cells and an
/// optional caption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTable {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
    pub header: Vec<String>,
    #[serde(default)]
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub id: u32,
    pub cells: Vec<CellValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    caption: Option<String>,
    columns: Vec<String>,
    rows: Vec<Row>,
}

impl Table {
    /// Builds a table from already-typed parts, checking shape and
    /// uniqueness. Column names are used verbatim.
    pub fn new(
        caption: Option<String>,
        columns: Vec<String>,
        rows: Vec<Row>,
    ) -> Result<Self, TableError> {
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.as_str()) {
                return Err(TableError::DuplicateColumn(c.clone()));
            }
        }
        let mut ids = HashSet::new();
        for (i, r) in rows.iter().enumerate() {
            if r.cells.len() != columns.len() {
                return Err(TableError::Ragged {
                    row: i + 1,
                    expected: columns.len(),
                    found: r.cells.len(),
                });
            }
            if !ids.insert(r.id) {
                return Err(TableError::DuplicateRowId(r.id));
            }
        }
        Ok(Table {
            caption,
            columns,
            rows,
        })
    }

    /// Loads a source record: sanitizes headers, types every cell and
    /// numbers rows `1..=N`.
    pub fn load(raw: &RawTable) -> Result<Self, TableError> {
        let columns = sanitize_headers(&raw.header);
        let mut rows = Vec::with_capacity(raw.rows.len());
        for (i, r) in raw.rows.iter().enumerate() {
            if r.len() != columns.len() {
                return Err(TableError::Ragged {
                    row: i + 1,
                    expected: columns.len(),
                    found: r.len(),
                });
            }
            rows.push(Row {
                id: (i + 1) as u32,
                cells: r.iter().map(|c| CellValue::parse(c)).collect(),
            });
        }
        let caption = raw
            .caption
            .as_ref()
            .map(|c| c.trim().to_string())
            .filter(|c| !c.is_empty());
        Ok(Table {
            caption,
            columns,
            rows,
        })
    }

    pub fn caption(&self) -> Option<&str> {
        self.caption.as_deref()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn cell_count(&self) -> usize {
        self.rows.len() * self.columns.len()
    }

    pub fn row_ids(&self) -> RowIdSet {
        self.rows.iter().map(|r| r.id).collect()
    }

    pub fn all_columns(&self) -> ColumnSet {
        ColumnSet(self.columns.clone())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Lenient column lookup: exact, then case-insensitive, then treating
    /// `_` and spaces as interchangeable.
    pub fn resolve_column(&self, name: &str) -> Option<usize> {
        if let Some(i) = self.column_index(name) {
            return Some(i);
        }
        let lowered = name.trim().to_lowercase();
        if let Some(i) = self.columns.iter().position(|c| c.to_lowercase() == lowered) {
            return Some(i);
        }
        let loose = |s: &str| s.replace('_', " ");
        let target = loose(&lowered);
        self.columns
            .iter()
            .position(|c| loose(&c.to_lowercase()) == target)
    }

    /// Resolves names against this table. Returns the valid ones as a
    /// [`ColumnSet`] in table order, plus the names that matched nothing.
    pub fn select_columns<I, S>(&self, names: I) -> (ColumnSet, Vec<String>)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut hit = vec![false; self.columns.len()];
        let mut rejected = Vec::new();
        for n in names {
            match self.resolve_column(n.as_ref()) {
                Some(i) => hit[i] = true,
                None => rejected.push(n.as_ref().to_string()),
            }
        }
        let set = self
            .columns
            .iter()
            .zip(hit)
            .filter(|(_, h)| *h)
            .map(|(c, _)| c.clone())
            .collect();
        (ColumnSet(set), rejected)
    }

    /// Union of two column selections, ordered by this table.
    pub fn union_columns(&self, a: &ColumnSet, b: &ColumnSet) -> ColumnSet {
        self.select_columns(a.iter().chain(b.iter())).0
    }

    /// Rotates the table: one output row per original column, whose first
    /// cell is the column name, followed by that column's values. Output
    /// headers are `column`, `row <id>`, ...
    pub fn transpose(&self) -> Table {
        let mut columns = Vec::with_capacity(self.rows.len() + 1);
        columns.push(TRANSPOSED_LABEL.to_string());
        columns.extend(self.rows.iter().map(|r| format!("row {}", r.id)));
        let rows = self
            .columns
            .iter()
            .enumerate()
            .map(|(ci, name)| {
                let mut cells = Vec::with_capacity(self.rows.len() + 1);
                cells.push(CellValue::text(name.clone()));
                cells.extend(self.rows.iter().map(|r| r.cells[ci].clone()));
                Row {
                    id: (ci + 1) as u32,
                    cells,
                }
            })
            .collect();
        Table {
            caption: self.caption.clone(),
            columns,
            rows,
        }
    }

    pub fn filter_columns(&self, selection: &ColumnSet) -> Result<Table, TableError> {
        if selection.is_empty() {
            return Err(TableError::EmptySelection);
        }
        let unknown: Vec<String> = selection
            .iter()
            .filter(|n| self.column_index(n).is_none())
            .map(str::to_string)
            .collect();
        if !unknown.is_empty() {
            return Err(TableError::UnknownColumns {
                unknown,
                valid: self.columns.clone(),
            });
        }
        let keep: Vec<usize> = (0..self.columns.len())
            .filter(|&i| selection.contains(&self.columns[i]))
            .collect();
        Ok(Table {
            caption: self.caption.clone(),
            columns: keep.iter().map(|&i| self.columns[i].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| Row {
                    id: r.id,
                    cells: keep.iter().map(|&i| r.cells[i].clone()).collect(),
                })
                .collect(),
        })
    }

    pub fn filter_rows(&self, selection: &RowIdSet) -> Result<Table, TableError> {
        if selection.is_empty() {
            return Err(TableError::EmptySelection);
        }
        let present: HashSet<u32> = self.rows.iter().map(|r| r.id).collect();
        let unknown: Vec<u32> = selection.iter().filter(|id| !present.contains(id)).collect();
        if !unknown.is_empty() {
            return Err(TableError::UnknownRows { unknown });
        }
        Ok(Table {
            caption: self.caption.clone(),
            columns: self.columns.clone(),
            rows: self
                .rows
                .iter()
                .filter(|r| selection.contains(r.id))
                .cloned()
                .collect(),
        })
    }

    /// The grid of rendered strings, header first.
    pub fn rendered_grid(&self) -> Vec<Vec<String>> {
        let mut grid = vec![self.columns.clone()];
        grid.extend(
            self.rows
                .iter()
                .map(|r| r.cells.iter().map(|c| c.render().to_string()).collect()),
        );
        grid
    }
}

/// Lowercases, trims and collapses whitespace; blank headers become
/// `column_<n>`; repeats (and the reserved `row_id`) get `_2`, `_3`, ...
pub fn sanitize_headers(header: &[String]) -> Vec<String> {
    let mut taken: HashSet<String> = HashSet::new();
    taken.insert(ROW_ID.to_string());
    let mut out = Vec::with_capacity(header.len());
    for (i, h) in header.iter().enumerate() {
        let mut base = h.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
        if base.is_empty() {
            base = format!("column_{}", i + 1);
        }
        let mut name = base.clone();
        let mut k = 2;
        while taken.contains(&name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        taken.insert(name.clone());
        out.push(name);
    }
    out
}

/// Ordered, deduplicated column names.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColumnSet(Vec<String>);

impl ColumnSet {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out: Vec<String> = Vec::new();
        for n in names {
            let n = n.into();
            if !out.contains(&n) {
                out.push(n);
            }
        }
        ColumnSet(out)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.iter().any(|n| n == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Display for ColumnSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&python_list(&self.0))
    }
}

/// Ascending, deduplicated row ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RowIdSet(BTreeSet<u32>);

impl RowIdSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: u32) -> bool {
        self.0.contains(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().copied()
    }

    pub fn union(&self, other: &RowIdSet) -> RowIdSet {
        RowIdSet(self.0.union(&other.0).copied().collect())
    }

    pub fn insert(&mut self, id: u32) {
        self.0.insert(id);
    }

    pub fn is_subset(&self, other: &RowIdSet) -> bool {
        self.0.is_subset(&other.0)
    }
}

impl FromIterator<u32> for RowIdSet {
    fn from_iter<T: IntoIterator<Item = u32>>(iter: T) -> Self {
        RowIdSet(iter.into_iter().collect())
    }
}

impl fmt::Display for RowIdSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "[{}]", ids.join(", "))
    }
}

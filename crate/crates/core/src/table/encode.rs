//! The two linear table formats used in prompts.
//!
//! PIPE encoding (text reasoning):
//!
//! ```text
//! table caption: <caption>
//! /
//! col : a | b | c
//! row <id>: v1 | v2 | v3
//! */
//! columns: ['a', 'b', 'c']
//! ```
//!
//! Field grammar for `col` and `row` lines: the prefix is followed by one
//! field per column, fields joined by `" |"`, and each non-empty field is
//! written as `" " + value`. An empty cell therefore renders as nothing,
//! e.g. `row 1: | 3`.
//!
//! SQL-schema encoding (symbolic reasoning): a `CREATE TABLE` statement,
//! then all rows tab-separated under a `SELECT * FROM w;` banner.

use super::{Table, TableError, ROW_ID};

/// Approximate token count: every maximal run of non-whitespace costs
/// `ceil(chars / 8)` tokens (one token, plus one per extra 8 characters).
pub fn token_estimate(s: &str) -> usize {
    s.split_whitespace()
        .map(|run| run.chars().count().div_ceil(8))
        .sum()
}

/// Python-style list literal: `['a', 'b']`. Strings containing a single
/// quote and no double quote are wrapped in double quotes, as `repr` does.
pub fn python_list<S: AsRef<str>>(items: &[S]) -> String {
    let parts: Vec<String> = items.iter().map(|s| python_repr(s.as_ref())).collect();
    format!("[{}]", parts.join(", "))
}

fn python_repr(s: &str) -> String {
    if s.contains('\'') && !s.contains('"') {
        format!("\"{}\"", s.replace('\\', "\\\\"))
    } else {
        format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'"))
    }
}

fn flatten(s: &str) -> String {
    if s.contains(['\n', '\r', '\t']) {
        s.replace(['\n', '\r', '\t'], " ")
    } else {
        s.to_string()
    }
}

fn pipe_fields<'a, I: Iterator<Item = &'a str>>(fields: I) -> String {
    fields
        .map(|f| {
            if f.is_empty() {
                String::new()
            } else {
                format!(" {}", flatten(f))
            }
        })
        .collect::<Vec<_>>()
        .join(" |")
}

pub fn encode_pipe(t: &Table) -> String {
    let mut lines = Vec::with_capacity(t.num_rows() + 5);
    if let Some(c) = t.caption() {
        lines.push(format!("table caption: {}", flatten(c)));
    }
    lines.push("/".to_string());
    lines.push(format!(
        "col :{}",
        pipe_fields(t.columns().iter().map(String::as_str))
    ));
    for r in t.rows() {
        lines.push(format!(
            "row {}:{}",
            r.id,
            pipe_fields(r.cells.iter().map(|c| c.render()))
        ));
    }
    lines.push("*/".to_string());
    lines.push(format!("columns: {}", python_list(t.columns())));
    lines.join("\n")
}

/// Result of [`parse_pipe`]: header and rendered cells, no typing applied.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedPipe {
    pub caption: Option<String>,
    pub columns: Vec<String>,
    pub rows: Vec<(u32, Vec<String>)>,
}

fn split_fields(rest: &str, expected: usize) -> Vec<String> {
    if expected == 0 {
        return Vec::new();
    }
    rest.split('|')
        .map(|piece| {
            let piece = piece.strip_prefix(' ').unwrap_or(piece);
            piece.strip_suffix(' ').unwrap_or(piece).to_string()
        })
        .collect()
}

/// Inverse of [`encode_pipe`] for cells without `|`, line breaks or
/// surrounding whitespace.
pub fn parse_pipe(text: &str) -> Result<ParsedPipe, TableError> {
    let malformed = |line: usize, reason: &str| TableError::Malformed {
        line,
        reason: reason.to_string(),
    };
    let lines: Vec<&str> = text.lines().collect();
    let mut i = 0;
    let mut caption = None;
    if let Some(c) = lines.first().and_then(|l| l.strip_prefix("table caption: ")) {
        caption = Some(c.to_string());
        i += 1;
    }
    if lines.get(i) != Some(&"/") {
        return Err(malformed(i + 1, "expected '/'"));
    }
    i += 1;
    let col_rest = lines
        .get(i)
        .and_then(|l| l.strip_prefix("col :"))
        .ok_or_else(|| malformed(i + 1, "expected 'col :' line"))?;
    let columns = if col_rest.is_empty() {
        Vec::new()
    } else {
        split_fields(col_rest, usize::MAX)
    };
    i += 1;
    let mut rows = Vec::new();
    while let Some(line) = lines.get(i) {
        if *line == "*/" {
            break;
        }
        let body = line
            .strip_prefix("row ")
            .ok_or_else(|| malformed(i + 1, "expected 'row <id>:'"))?;
        let (id, rest) = body
            .split_once(':')
            .ok_or_else(|| malformed(i + 1, "missing ':' after row id"))?;
        let id: u32 = id
            .parse()
            .map_err(|_| malformed(i + 1, "row id is not an integer"))?;
        let cells = split_fields(rest, columns.len());
        if cells.len() != columns.len() {
            return Err(malformed(i + 1, "field count does not match header"));
        }
        rows.push((id, cells));
        i += 1;
    }
    if lines.get(i) != Some(&"*/") {
        return Err(malformed(i + 1, "expected '*/'"));
    }
    Ok(ParsedPipe {
        caption,
        columns,
        rows,
    })
}

/// SQL-schema rendering plus how many data rows survived the token budget.
#[derive(Debug, Clone, PartialEq)]
pub struct SqlSchemaEncoding {
    pub text: String,
    pub rows_included: usize,
    pub rows_total: usize,
}

impl SqlSchemaEncoding {
    pub fn truncated(&self) -> bool {
        self.rows_included < self.rows_total
    }
}

fn is_bare_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn column_type(t: &Table, idx: usize) -> &'static str {
    let mut any = false;
    let mut real = false;
    for r in t.rows() {
        let c = &r.cells[idx];
        if c.is_empty() {
            continue;
        }
        if c.as_number().is_none() {
            return "text";
        }
        any = true;
        real |= c.render().contains('.');
    }
    match (any, real) {
        (false, _) => "text",
        (true, false) => "int",
        (true, true) => "real",
    }
}

/// Renders the `CREATE TABLE` prompt block. Trailing data rows are dropped
/// until the whole rendering fits in `token_budget` (per
/// [`token_estimate`]); schema and header are always kept.
pub fn encode_sql_schema(t: &Table, token_budget: usize) -> SqlSchemaEncoding {
    let name = t.caption().map(flatten).unwrap_or_else(|| "w".to_string());
    let mut head = vec![format!("CREATE TABLE {name}(")];
    let mut decls = vec![format!("\t{ROW_ID} int")];
    for (i, c) in t.columns().iter().enumerate() {
        let ident = if is_bare_identifier(c) {
            c.clone()
        } else {
            format!("\"{}\"", flatten(c))
        };
        decls.push(format!("\t{ident} {}", column_type(t, i)));
    }
    let last = decls.len() - 1;
    for (i, d) in decls.into_iter().enumerate() {
        head.push(if i == last { format!("{d})") } else { format!("{d},") });
    }
    head.push("/".to_string());
    head.push("All rows of the table:".to_string());
    head.push("SELECT * FROM w;".to_string());
    let mut header = vec![ROW_ID.to_string()];
    header.extend(t.columns().iter().map(|c| flatten(c)));
    head.push(header.join("\t"));

    let tail = [
        "/".to_string(),
        format!("columns: {}", python_list(t.columns())),
    ];

    let fixed: usize = head
        .iter()
        .chain(tail.iter())
        .map(|l| token_estimate(l))
        .sum();
    let mut used = fixed;
    let mut body = Vec::new();
    for r in t.rows() {
        let mut fields = vec![r.id.to_string()];
        fields.extend(r.cells.iter().map(|c| flatten(c.render())));
        let line = fields.join("\t");
        let cost = token_estimate(&line);
        if used + cost > token_budget {
            break;
        }
        used += cost;
        body.push(line);
    }
    let rows_included = body.len();
    let text = head
        .into_iter()
        .chain(body)
        .chain(tail)
        .collect::<Vec<_>>()
        .join("\n");
    SqlSchemaEncoding {
        text,
        rows_included,
        rows_total: t.num_rows(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{RawTable, Table};

    fn table(header: &[&str], rows: &[&[&str]]) -> Table {
        Table::load(&RawTable {
            caption: None,
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: rows
                .iter()
                .map(|r| r.iter().map(|s| s.to_string()).collect())
                .collect(),
        })
        .unwrap()
    }

    #[test]
    fn token_estimate_rule() {
        assert_eq!(token_estimate(""), 0);
        assert_eq!(token_estimate("a b c"), 3);
        assert_eq!(token_estimate("abcdefgh"), 1);
        assert_eq!(token_estimate("abcdefghi"), 2);
        assert_eq!(token_estimate("  x\n\tyyyyyyyyyyyyyyyyy "), 1 + 3);
    }

    #[test]
    fn python_list_quoting() {
        assert_eq!(python_list(&["a", "b"]), "['a', 'b']");
        assert_eq!(python_list(&["o'flynn"]), "[\"o'flynn\"]");
        assert_eq!(python_list::<&str>(&[]), "[]");
    }

    #[test]
    fn zero_rows_pipe() {
        let t = table(&["a", "b"], &[]);
        assert_eq!(encode_pipe(&t), "/\ncol : a | b\n*/\ncolumns: ['a', 'b']");
    }

    #[test]
    fn empty_cell_pipe() {
        let t = table(&["a", "b"], &[&["", "3"], &["x", ""]]);
        let s = encode_pipe(&t);
        assert!(s.contains("\nrow 1: | 3\n"), "{s}");
        assert!(s.contains("\nrow 2: x |\n"), "{s}");
        let back = parse_pipe(&s).unwrap();
        assert_eq!(back.rows[0], (1, vec!["".to_string(), "3".to_string()]));
        assert_eq!(back.rows[1], (2, vec!["x".to_string(), "".to_string()]));
    }

    #[test]
    fn mixed_column_is_text() {
        let t = table(&["a", "b", "c", "d"], &[&["3", "1.5", "", "x"], &["n/a", "2", "", "4"]]);
        let s = encode_sql_schema(&t, usize::MAX).text;
        assert!(s.contains("\ta text,"), "{s}");
        assert!(s.contains("\tb real,"), "{s}");
        assert!(s.contains("\tc text,"), "{s}");
        assert!(s.contains("\td text)"), "{s}");
    }

    #[test]
    fn degenerate_budget_keeps_header_only() {
        let t = table(&["a"], &[&["1"], &["2"]]);
        let enc = encode_sql_schema(&t, 1);
        assert_eq!(enc.rows_included, 0);
        assert!(enc.truncated());
        assert!(enc.text.contains("row_id\ta\n/\n"));
    }

    #[test]
    fn quoted_identifiers_in_schema() {
        let t = table(&["national cup", "year"], &[&["x", "1936"]]);
        let s = encode_sql_schema(&t, usize::MAX).text;
        assert!(s.starts_with("CREATE TABLE w(\n\trow_id int,\n\t\"national cup\" text,\n\tyear int)\n"));
    }
}

use std::fmt;

use serde::{Deserialize, Serialize};

/// A single table cell.
///
/// Numbers keep the lexeme they were parsed from so that rendering is
/// always byte-identical to the source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CellValue {
    Text { text: String },
    Number { value: f64, lexeme: String },
    Empty,
}

impl CellValue {
    /// Types a raw cell string after trimming it: blank becomes `Empty`,
    /// numeric lexemes become `Number`, everything else stays text.
    pub fn parse(raw: &str) -> Self {
        let raw = raw.trim();
        if raw.is_empty() {
            return CellValue::Empty;
        }
        match parse_numeric(raw) {
            Some(value) => CellValue::Number {
                value,
                lexeme: raw.to_string(),
            },
            None => CellValue::Text {
                text: raw.to_string(),
            },
        }
    }

    pub fn text(s: impl Into<String>) -> Self {
        CellValue::Text { text: s.into() }
    }

    /// A number produced by computation rather than parsing.
    pub fn number(value: f64) -> Self {
        CellValue::Number {
            value,
            lexeme: format_number(value),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, CellValue::Empty)
    }

    pub fn render(&self) -> &str {
        match self {
            CellValue::Text { text } => text,
            CellValue::Number { lexeme, .. } => lexeme,
            CellValue::Empty => "",
        }
    }

    /// Numeric view of the cell: the stored value for numbers, a parse of
    /// the text for text cells, `None` for empties.
    pub fn as_number(&self) -> Option<f64> {
        match self {
            CellValue::Number { value, .. } => Some(*value),
            CellValue::Text { text } => parse_numeric(text),
            CellValue::Empty => None,
        }
    }
}

impl fmt::Display for CellValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.render())
    }
}

/// Parses a numeric lexeme: optional sign, digits (optionally grouped by
/// thousands commas) and an optional fractional part. Surrounding
/// whitespace is ignored. Commas are stripped for the value.
pub fn parse_numeric(raw: &str) -> Option<f64> {
    let s = raw.trim();
    let unsigned = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (int_part, frac_part) = match unsigned.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (unsigned, None),
    };
    if let Some(frac) = frac_part {
        if !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if int_part.is_empty() && frac.is_empty() {
            return None;
        }
    } else if int_part.is_empty() {
        return None;
    }
    if !int_part.is_empty() && !valid_integer_part(int_part) {
        return None;
    }
    let cleaned: String = s.chars().filter(|&c| c != ',').collect();
    cleaned.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn valid_integer_part(s: &str) -> bool {
    if !s.contains(',') {
        return s.bytes().all(|b| b.is_ascii_digit());
    }
    let mut groups = s.split(',');
    let head = groups.next().unwrap_or("");
    if head.is_empty() || head.len() > 3 || !head.bytes().all(|b| b.is_ascii_digit()) {
        return false;
    }
    groups.all(|g| g.len() == 3 && g.bytes().all(|b| b.is_ascii_digit()))
}

/// Renders a computed number: integral values without a fractional part,
/// everything else in the shortest round-tripping form.
pub fn format_number(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if value.fract() == 0.0 && value.abs() < 1e15 {
        format!("{}", value as i64)
    } else {
        format!("{value}")
    }
}

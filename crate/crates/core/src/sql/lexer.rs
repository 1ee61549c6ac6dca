use std::fmt;

use super::SqlError;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    /// Bare word; keywords are recognized by the parser, case-insensitively.
    Word(String),
    /// `"..."` or `` `...` ``.
    QuotedIdent(String),
    /// `'...'`.
    Str(String),
    Number(String),
    Comma,
    Dot,
    LParen,
    RParen,
    Star,
    Plus,
    Minus,
    Slash,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Semicolon,
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Word(w) => write!(f, "{w}"),
            TokenKind::QuotedIdent(s) => write!(f, "\"{s}\""),
            TokenKind::Str(s) => write!(f, "'{s}'"),
            TokenKind::Number(n) => write!(f, "{n}"),
            TokenKind::Comma => f.write_str(","),
            TokenKind::Dot => f.write_str("."),
            TokenKind::LParen => f.write_str("("),
            TokenKind::RParen => f.write_str(")"),
            TokenKind::Star => f.write_str("*"),
            TokenKind::Plus => f.write_str("+"),
            TokenKind::Minus => f.write_str("-"),
            TokenKind::Slash => f.write_str("/"),
            TokenKind::Eq => f.write_str("="),
            TokenKind::Ne => f.write_str("!="),
            TokenKind::Lt => f.write_str("<"),
            TokenKind::Le => f.write_str("<="),
            TokenKind::Gt => f.write_str(">"),
            TokenKind::Ge => f.write_str(">="),
            TokenKind::Semicolon => f.write_str(";"),
            TokenKind::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    /// Byte offset into the query text.
    pub offset: usize,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, SqlError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = text[i..].chars().next().unwrap_or('\0');
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        let start = i;
        let kind = match c {
            ',' => single(&mut i, TokenKind::Comma),
            '.' if !bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => {
                single(&mut i, TokenKind::Dot)
            }
            '(' => single(&mut i, TokenKind::LParen),
            ')' => single(&mut i, TokenKind::RParen),
            '*' => single(&mut i, TokenKind::Star),
            '+' => single(&mut i, TokenKind::Plus),
            '-' => single(&mut i, TokenKind::Minus),
            '/' => single(&mut i, TokenKind::Slash),
            ';' => single(&mut i, TokenKind::Semicolon),
            '=' => {
                i += if bytes.get(i + 1) == Some(&b'=') { 2 } else { 1 };
                TokenKind::Eq
            }
            '!' if bytes.get(i + 1) == Some(&b'=') => {
                i += 2;
                TokenKind::Ne
            }
            '<' => match bytes.get(i + 1) {
                Some(b'=') => {
                    i += 2;
                    TokenKind::Le
                }
                Some(b'>') => {
                    i += 2;
                    TokenKind::Ne
                }
                _ => single(&mut i, TokenKind::Lt),
            },
            '>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    i += 2;
                    TokenKind::Ge
                } else {
                    single(&mut i, TokenKind::Gt)
                }
            }
            '\'' => TokenKind::Str(quoted(text, &mut i, '\'')?),
            '"' => TokenKind::QuotedIdent(quoted(text, &mut i, '"')?),
            '`' => TokenKind::QuotedIdent(quoted(text, &mut i, '`')?),
            c if c.is_ascii_digit() || c == '.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                let lexeme = &text[start..i];
                if lexeme.matches('.').count() > 1 {
                    return Err(SqlError::lexical(start, "malformed number"));
                }
                TokenKind::Number(lexeme.to_string())
            }
            c if c.is_alphabetic() || c == '_' => {
                while let Some(ch) = text[i..].chars().next() {
                    if ch.is_alphanumeric() || ch == '_' {
                        i += ch.len_utf8();
                    } else {
                        break;
                    }
                }
                TokenKind::Word(text[start..i].to_string())
            }
            other => {
                return Err(SqlError::lexical(
                    start,
                    &format!("unexpected character {other:?}"),
                ))
            }
        };
        out.push(Token {
            kind,
            offset: start,
        });
    }
    out.push(Token {
        kind: TokenKind::Eof,
        offset: text.len(),
    });
    Ok(out)
}

fn single(i: &mut usize, kind: TokenKind) -> TokenKind {
    *i += 1;
    kind
}

/// Reads a quoted run starting at `*i` (which points at the opening quote).
/// A doubled quote character stands for itself.
fn quoted(text: &str, i: &mut usize, q: char) -> Result<String, SqlError> {
    let start = *i;
    *i += 1;
    let mut s = String::new();
    loop {
        let Some(ch) = text[*i..].chars().next() else {
            return Err(SqlError::lexical(start, "unterminated quoted string"));
        };
        *i += ch.len_utf8();
        if ch == q {
            if text[*i..].starts_with(q) {
                s.push(q);
                *i += 1;
                continue;
            }
            return Ok(s);
        }
        s.push(ch);
    }
}

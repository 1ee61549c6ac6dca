//! Recursive-descent parser for the query dialect.
//!
//! ```text
//! query    := SELECT items FROM name [WHERE expr] [GROUP BY expr {, expr}]
//!             [ORDER BY expr [ASC|DESC] {, ...}] [LIMIT int] [;]
//! items    := '*' | expr [[AS] alias] {, expr [[AS] alias]}
//! expr     := and {OR and}
//! and      := not {AND not}
//! not      := NOT not | pred
//! pred     := sum [cmp sum | [NOT] LIKE sum | [NOT] IN (expr, ...)
//!                 | [NOT] BETWEEN sum AND sum | IS [NOT] NULL]
//! sum      := term {(+|-) term}
//! term     := unary {(*|/) unary}
//! unary    := - unary | primary
//! primary  := number | 'str' | "ident" | ident[.ident] | agg ( * | expr ) | ( expr )
//! ```

use super::ast::{Aggregate, BinOp, Expr, OrderItem, Query, SelectItem, SelectList};
use super::lexer::{tokenize, Token, TokenKind};
use super::SqlError;

const RESERVED: &[&str] = &[
    "select", "from", "where", "group", "by", "order", "asc", "desc", "limit", "and", "or",
    "not", "like", "in", "between", "as", "is", "null", "having", "join", "union",
];

pub(crate) fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word.to_ascii_lowercase().as_str())
}

pub fn parse_query(text: &str) -> Result<Query, SqlError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let q = p.query()?;
    Ok(q)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &TokenKind {
        &self.tokens[self.pos].kind
    }

    fn peek_at(&self, n: usize) -> &TokenKind {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].kind
    }

    fn bump(&mut self) -> TokenKind {
        let k = self.tokens[self.pos].kind.clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        k
    }

    fn error(&self, expected: &[&str]) -> SqlError {
        let tok = &self.tokens[self.pos];
        SqlError::Syntax {
            offset: tok.offset,
            found: tok.kind.to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), TokenKind::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), SqlError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error(&[kw]))
        }
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == kind {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<(), SqlError> {
        if self.eat(&kind) {
            Ok(())
        } else {
            Err(self.error(&[&kind.to_string()]))
        }
    }

    fn query(&mut self) -> Result<Query, SqlError> {
        self.expect_keyword("SELECT")?;
        let select = if self.eat(&TokenKind::Star) {
            SelectList::All
        } else {
            let mut items = vec![self.select_item()?];
            while self.eat(&TokenKind::Comma) {
                items.push(self.select_item()?);
            }
            SelectList::Items(items)
        };
        self.expect_keyword("FROM")?;
        let from = match self.bump() {
            TokenKind::Word(w) if !is_reserved(&w) => w,
            TokenKind::QuotedIdent(w) => w,
            _ => {
                self.pos -= 1;
                return Err(self.error(&["table name"]));
            }
        };
        let filter = if self.eat_keyword("WHERE") {
            Some(self.expr()?)
        } else {
            None
        };
        let mut group_by = Vec::new();
        if self.eat_keyword("GROUP") {
            self.expect_keyword("BY")?;
            group_by.push(self.expr()?);
            while self.eat(&TokenKind::Comma) {
                group_by.push(self.expr()?);
            }
        }
        let mut order_by = Vec::new();
        if self.eat_keyword("ORDER") {
            self.expect_keyword("BY")?;
            loop {
                let expr = self.expr()?;
                let descending = if self.eat_keyword("DESC") {
                    true
                } else {
                    self.eat_keyword("ASC");
                    false
                };
                order_by.push(OrderItem { expr, descending });
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        let limit = if self.eat_keyword("LIMIT") {
            match self.bump() {
                TokenKind::Number(n) => match n.parse::<u64>() {
                    Ok(v) => Some(v),
                    Err(_) => {
                        self.pos -= 1;
                        return Err(self.error(&["non-negative integer"]));
                    }
                },
                _ => {
                    self.pos -= 1;
                    return Err(self.error(&["non-negative integer"]));
                }
            }
        } else {
            None
        };
        self.eat(&TokenKind::Semicolon);
        if self.peek() != &TokenKind::Eof {
            let mut expected = Vec::new();
            if filter.is_none() && group_by.is_empty() && order_by.is_empty() && limit.is_none() {
                expected.push("WHERE");
            }
            if group_by.is_empty() && order_by.is_empty() && limit.is_none() {
                expected.push("GROUP BY");
            }
            if order_by.is_empty() && limit.is_none() {
                expected.push("ORDER BY");
            }
            if limit.is_none() {
                expected.push("LIMIT");
            }
            expected.push("end of input");
            return Err(self.error(&expected));
        }
        Ok(Query {
            select,
            from,
            filter,
            group_by,
            order_by,
            limit,
        })
    }

    fn select_item(&mut self) -> Result<SelectItem, SqlError> {
        let expr = self.expr()?;
        let alias = if self.eat_keyword("AS") {
            match self.bump() {
                TokenKind::Word(w) => Some(w),
                TokenKind::QuotedIdent(w) | TokenKind::Str(w) => Some(w),
                _ => {
                    self.pos -= 1;
                    return Err(self.error(&["alias"]));
                }
            }
        } else {
            match self.peek().clone() {
                TokenKind::Word(w) if !is_reserved(&w) => {
                    self.bump();
                    Some(w)
                }
                _ => None,
            }
        };
        Ok(SelectItem { expr, alias })
    }

    fn expr(&mut self) -> Result<Expr, SqlError> {
        let mut left = self.and_expr()?;
        while self.eat_keyword("OR") {
            let right = self.and_expr()?;
            left = Expr::binary(BinOp::Or, left, right);
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<Expr, SqlError> {
        let mut left = self.not_expr()?;
        while self.eat_keyword("AND") {
            let right = self.not_expr()?;
            left = Expr::binary(BinOp::And, left, right);
        }
        Ok(left)
    }

    fn not_expr(&mut self) -> Result<Expr, SqlError> {
        if self.eat_keyword("NOT") {
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        self.predicate()
    }

    fn predicate(&mut self) -> Result<Expr, SqlError> {
        let left = self.sum()?;
        let cmp = match self.peek() {
            TokenKind::Eq => Some(BinOp::Eq),
            TokenKind::Ne => Some(BinOp::Ne),
            TokenKind::Lt => Some(BinOp::Lt),
            TokenKind::Le => Some(BinOp::Le),
            TokenKind::Gt => Some(BinOp::Gt),
            TokenKind::Ge => Some(BinOp::Ge),
            _ => None,
        };
        if let Some(op) = cmp {
            self.bump();
            let right = self.sum()?;
            return Ok(Expr::binary(op, left, right));
        }
        if self.eat_keyword("IS") {
            let negated = self.eat_keyword("NOT");
            self.expect_keyword("NULL")?;
            return Ok(Expr::IsNull {
                expr: Box::new(left),
                negated,
            });
        }
        let negated = if self.at_keyword("NOT")
            && matches!(self.peek_at(1), TokenKind::Word(w)
                if ["like", "in", "between"].contains(&w.to_ascii_lowercase().as_str()))
        {
            self.bump();
            true
        } else {
            false
        };
        if self.eat_keyword("LIKE") {
            let pattern = self.sum()?;
            return Ok(Expr::Like {
                expr: Box::new(left),
                pattern: Box::new(pattern),
                negated,
            });
        }
        if self.eat_keyword("IN") {
            self.expect(TokenKind::LParen)?;
            let mut list = vec![self.expr()?];
            while self.eat(&TokenKind::Comma) {
                list.push(self.expr()?);
            }
            self.expect(TokenKind::RParen)?;
            return Ok(Expr::InList {
                expr: Box::new(left),
                list,
                negated,
            });
        }
        if self.eat_keyword("BETWEEN") {
            let low = self.sum()?;
            self.expect_keyword("AND")?;
            let high = self.sum()?;
            return Ok(Expr::Between {
                expr: Box::new(left),
                low: Box::new(low),
                high: Box::new(high),
                negated,
            });
        }
        Ok(left)
    }

    fn sum(&mut self) -> Result<Expr, SqlError> {
        let mut left = self.term()?;
        loop {
            let op = match self.peek() {
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                _ => return Ok(left),
            };
            self.bump();
            let right = self.term()?;
            left = Expr::binary(op, left, right);
        }
    }

    fn term(&mut self) -> Result<Expr, SqlError> {
        let mut left = self.unary()?;
        loop {
            let op = match self.peek() {
                TokenKind::Star => BinOp::Mul,
                TokenKind::Slash => BinOp::Div,
                _ => return Ok(left),
            };
            self.bump();
            let right = self.unary()?;
            left = Expr::binary(op, left, right);
        }
    }

    fn unary(&mut self) -> Result<Expr, SqlError> {
        if self.eat(&TokenKind::Minus) {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(&TokenKind::Plus) {
            return self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, SqlError> {
        const EXPECTED: &[&str] = &["column", "literal", "aggregate", "("];
        match self.peek().clone() {
            TokenKind::Number(n) => {
                self.bump();
                Ok(Expr::Number(n))
            }
            TokenKind::Str(s) => {
                self.bump();
                Ok(Expr::Str(s))
            }
            TokenKind::QuotedIdent(s) => {
                self.bump();
                Ok(Expr::Quoted(s))
            }
            TokenKind::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(e)
            }
            TokenKind::Word(w) => {
                if let (Some(func), TokenKind::LParen) = (Aggregate::from_name(&w), self.peek_at(1)) {
                    self.bump();
                    self.bump();
                    let arg = if self.eat(&TokenKind::Star) {
                        None
                    } else {
                        Some(Box::new(self.expr()?))
                    };
                    self.expect(TokenKind::RParen)?;
                    if arg.is_none() && func != Aggregate::Count {
                        return Err(SqlError::Invalid(format!("{}(*) is not allowed", func.name())));
                    }
                    return Ok(Expr::Aggregate { func, arg });
                }
                if is_reserved(&w) {
                    return Err(self.error(EXPECTED));
                }
                self.bump();
                if self.peek() == &TokenKind::Dot {
                    self.bump();
                    return match self.bump() {
                        TokenKind::Word(c) => Ok(Expr::Column(c)),
                        TokenKind::QuotedIdent(c) => Ok(Expr::Quoted(c)),
                        _ => {
                            self.pos -= 1;
                            Err(self.error(&["column"]))
                        }
                    };
                }
                Ok(Expr::Column(w))
            }
            _ => Err(self.error(EXPECTED)),
        }
    }
}

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::ast::{Aggregate, BinOp, Expr, Query, SelectList};
use super::SqlError;
use crate::table::{CellValue, ColumnSet, Row, RowIdSet, Table, TableError, ROW_ID};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub source_row_ids: RowIdSet,
    pub values: Vec<CellValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub columns: Vec<String>,
    pub rows: Vec<ResultRow>,
}

impl ResultSet {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Union of every row's provenance.
    pub fn row_ids(&self) -> RowIdSet {
        self.rows
            .iter()
            .fold(RowIdSet::default(), |acc, r| acc.union(&r.source_row_ids))
    }

    pub fn first_value(&self) -> Option<&CellValue> {
        self.rows.first().and_then(|r| r.values.first())
    }

    /// The result as a standalone table with rows numbered from 1. Repeated
    /// output names get `_2`, `_3`, ... suffixes.
    pub fn to_table(&self) -> Result<Table, TableError> {
        let mut used = HashSet::new();
        let mut columns = Vec::with_capacity(self.columns.len());
        for c in &self.columns {
            let mut name = c.clone();
            let mut k = 2;
            while !used.insert(name.clone()) {
                name = format!("{c}_{k}");
                k += 1;
            }
            columns.push(name);
        }
        let rows = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| Row {
                id: (i + 1) as u32,
                cells: r.values.clone(),
            })
            .collect();
        Table::new(None, columns, rows)
    }
}

pub fn result_row_ids(rs: &ResultSet) -> RowIdSet {
    rs.row_ids()
}

#[derive(Debug, Clone)]
enum Bound {
    Col(usize),
    RowId,
    Lit(CellValue),
    Neg(Box<Bound>),
    Not(Box<Bound>),
    Bin(BinOp, Box<Bound>, Box<Bound>),
    Like(Box<Bound>, Box<Bound>, bool),
    In(Box<Bound>, Vec<Bound>, bool),
    Between(Box<Bound>, Box<Bound>, Box<Bound>, bool),
    IsNull(Box<Bound>, bool),
    Agg(Aggregate, Option<Box<Bound>>),
}

#[derive(Clone, Copy, PartialEq)]
enum Clause {
    Select,
    Filter,
    Group,
    Order,
}

struct Binder<'a> {
    table: &'a Table,
    referenced: Vec<bool>,
}

impl<'a> Binder<'a> {
    fn new(table: &'a Table) -> Self {
        Binder {
            table,
            referenced: vec![false; table.num_columns()],
        }
    }

    fn unknown(&self, name: &str) -> SqlError {
        let mut valid = vec![ROW_ID.to_string()];
        valid.extend(self.table.columns().iter().cloned());
        SqlError::UnknownColumn {
            name: name.to_string(),
            valid,
        }
    }

    fn lookup(&mut self, name: &str) -> Option<Bound> {
        if name.eq_ignore_ascii_case(ROW_ID) {
            return Some(Bound::RowId);
        }
        self.table.resolve_column(name).map(|i| {
            self.referenced[i] = true;
            Bound::Col(i)
        })
    }

    fn bind(&mut self, e: &Expr, clause: Clause, in_agg: bool) -> Result<Bound, SqlError> {
        let sub = |b: &mut Self, x: &Expr| b.bind(x, clause, in_agg).map(Box::new);
        Ok(match e {
            Expr::Column(name) => self.lookup(name).ok_or_else(|| self.unknown(name))?,
            Expr::Quoted(name) => self
                .lookup(name)
                .unwrap_or_else(|| Bound::Lit(CellValue::text(name.clone()))),
            Expr::Str(s) => Bound::Lit(CellValue::text(s.clone())),
            Expr::Number(n) => Bound::Lit(match crate::table::parse_numeric(n) {
                Some(value) => CellValue::Number {
                    value,
                    lexeme: n.clone(),
                },
                None => CellValue::text(n.clone()),
            }),
            Expr::Neg(x) => Bound::Neg(sub(self, x)?),
            Expr::Not(x) => Bound::Not(sub(self, x)?),
            Expr::Binary { op, left, right } => Bound::Bin(*op, sub(self, left)?, sub(self, right)?),
            Expr::Like {
                expr,
                pattern,
                negated,
            } => Bound::Like(sub(self, expr)?, sub(self, pattern)?, *negated),
            Expr::InList {
                expr,
                list,
                negated,
            } => {
                let head = sub(self, expr)?;
                let items = list
                    .iter()
                    .map(|x| self.bind(x, clause, in_agg))
                    .collect::<Result<_, _>>()?;
                Bound::In(head, items, *negated)
            }
            Expr::Between {
                expr,
                low,
                high,
                negated,
            } => Bound::Between(sub(self, expr)?, sub(self, low)?, sub(self, high)?, *negated),
            Expr::IsNull { expr, negated } => Bound::IsNull(sub(self, expr)?, *negated),
            Expr::Aggregate { func, arg } => {
                if in_agg {
                    return Err(SqlError::Invalid("nested aggregate".into()));
                }
                if matches!(clause, Clause::Filter | Clause::Group) {
                    return Err(SqlError::Invalid(format!(
                        "aggregate {} not allowed in {}",
                        func.name(),
                        if clause == Clause::Filter { "WHERE" } else { "GROUP BY" }
                    )));
                }
                let arg = match arg {
                    Some(a) => Some(Box::new(self.bind(a, clause, true)?)),
                    None => None,
                };
                Bound::Agg(*func, arg)
            }
        })
    }
}

/// Comparison used by `=`, `<`, `IN`, `BETWEEN`, ...: numeric when both
/// sides coerce to numbers, otherwise case-insensitive on rendered text.
pub fn compare_values(a: &CellValue, b: &CellValue) -> Ordering {
    match (a.as_number(), b.as_number()) {
        (Some(x), Some(y)) => x.partial_cmp(&y).unwrap_or(Ordering::Equal),
        _ => a.render().to_lowercase().cmp(&b.render().to_lowercase()),
    }
}

/// Total order for ORDER BY: empties, then numbers, then text.
pub fn sort_order(a: &CellValue, b: &CellValue) -> Ordering {
    fn class(v: &CellValue) -> u8 {
        match (v.is_empty(), v.as_number()) {
            (true, _) => 0,
            (false, Some(_)) => 1,
            (false, None) => 2,
        }
    }
    class(a).cmp(&class(b)).then_with(|| match (a.as_number(), b.as_number()) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        _ => a
            .render()
            .to_lowercase()
            .cmp(&b.render().to_lowercase())
            .then_with(|| a.render().cmp(b.render())),
    })
}

/// Case-insensitive LIKE with `%` and `_` wildcards.
pub fn like_match(text: &str, pattern: &str) -> bool {
    let t: Vec<char> = text.to_lowercase().chars().collect();
    let p: Vec<char> = pattern.to_lowercase().chars().collect();
    // dp[j]: pattern prefix of length j matches text prefix processed so far
    let mut dp = vec![false; p.len() + 1];
    dp[0] = true;
    for j in 1..=p.len() {
        dp[j] = dp[j - 1] && p[j - 1] == '%';
    }
    for &tc in &t {
        let mut next = vec![false; p.len() + 1];
        for j in 1..=p.len() {
            next[j] = match p[j - 1] {
                '%' => next[j - 1] || dp[j],
                '_' => dp[j - 1],
                c => dp[j - 1] && c == tc,
            };
        }
        dp = next;
    }
    dp[p.len()]
}

fn truthy(v: &CellValue) -> bool {
    v.as_number().is_some_and(|n| n != 0.0)
}

fn boolean(b: bool) -> CellValue {
    CellValue::number(if b { 1.0 } else { 0.0 })
}

fn arith(op: BinOp, a: &CellValue, b: &CellValue) -> CellValue {
    let (Some(x), Some(y)) = (a.as_number(), b.as_number()) else {
        return CellValue::Empty;
    };
    let v = match op {
        BinOp::Add => x + y,
        BinOp::Sub => x - y,
        BinOp::Mul => x * y,
        BinOp::Div => {
            if y == 0.0 {
                return CellValue::Empty;
            }
            x / y
        }
        _ => unreachable!("not arithmetic"),
    };
    if v.is_finite() {
        CellValue::number(v)
    } else {
        CellValue::Empty
    }
}

struct Ctx<'a> {
    table: &'a Table,
    row: Option<usize>,
    group: &'a [usize],
}

fn eval(b: &Bound, ctx: &Ctx) -> CellValue {
    match b {
        Bound::Col(i) => ctx
            .row
            .map(|r| ctx.table.rows()[r].cells[*i].clone())
            .unwrap_or(CellValue::Empty),
        Bound::RowId => ctx
            .row
            .map(|r| CellValue::number(ctx.table.rows()[r].id as f64))
            .unwrap_or(CellValue::Empty),
        Bound::Lit(v) => v.clone(),
        Bound::Neg(x) => match eval(x, ctx).as_number() {
            Some(n) => CellValue::number(-n),
            None => CellValue::Empty,
        },
        Bound::Not(x) => boolean(!truthy(&eval(x, ctx))),
        Bound::Bin(op, l, r) => match op {
            BinOp::And => boolean(truthy(&eval(l, ctx)) && truthy(&eval(r, ctx))),
            BinOp::Or => boolean(truthy(&eval(l, ctx)) || truthy(&eval(r, ctx))),
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                arith(*op, &eval(l, ctx), &eval(r, ctx))
            }
            cmp => {
                let o = compare_values(&eval(l, ctx), &eval(r, ctx));
                boolean(match cmp {
                    BinOp::Eq => o == Ordering::Equal,
                    BinOp::Ne => o != Ordering::Equal,
                    BinOp::Lt => o == Ordering::Less,
                    BinOp::Le => o != Ordering::Greater,
                    BinOp::Gt => o == Ordering::Greater,
                    BinOp::Ge => o != Ordering::Less,
                    _ => unreachable!(),
                })
            }
        },
        Bound::Like(x, p, neg) => {
            let m = like_match(eval(x, ctx).render(), eval(p, ctx).render());
            boolean(m != *neg)
        }
        Bound::In(x, list, neg) => {
            let v = eval(x, ctx);
            let hit = list
                .iter()
                .any(|i| compare_values(&v, &eval(i, ctx)) == Ordering::Equal);
            boolean(hit != *neg)
        }
        Bound::Between(x, lo, hi, neg) => {
            let v = eval(x, ctx);
            let inside = compare_values(&v, &eval(lo, ctx)) != Ordering::Less
                && compare_values(&v, &eval(hi, ctx)) != Ordering::Greater;
            boolean(inside != *neg)
        }
        Bound::IsNull(x, neg) => boolean(eval(x, ctx).is_empty() != *neg),
        Bound::Agg(func, arg) => aggregate(*func, arg.as_deref(), ctx),
    }
}

fn aggregate(func: Aggregate, arg: Option<&Bound>, ctx: &Ctx) -> CellValue {
    let Some(arg) = arg else {
        return CellValue::number(ctx.group.len() as f64);
    };
    let values = ctx.group.iter().map(|&r| {
        eval(
            arg,
            &Ctx {
                table: ctx.table,
                row: Some(r),
                group: ctx.group,
            },
        )
    });
    if func == Aggregate::Count {
        return CellValue::number(values.filter(|v| !v.is_empty()).count() as f64);
    }
    let nums: Vec<f64> = values.filter_map(|v| v.as_number()).collect();
    if nums.is_empty() {
        return CellValue::Empty;
    }
    let v = match func {
        Aggregate::Sum => nums.iter().sum(),
        Aggregate::Avg => nums.iter().sum::<f64>() / nums.len() as f64,
        Aggregate::Min => nums.iter().copied().fold(f64::INFINITY, f64::min),
        Aggregate::Max => nums.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Aggregate::Count => unreachable!(),
    };
    CellValue::number(v)
}

struct Plan {
    projections: Option<Vec<Bound>>,
    columns: Vec<String>,
    filter: Option<Bound>,
    group_by: Vec<Bound>,
    order_by: Vec<(Bound, bool)>,
    aggregated: bool,
    referenced: Vec<bool>,
}

fn plan(q: &Query, t: &Table) -> Result<Plan, SqlError> {
    let mut binder = Binder::new(t);
    let (projections, columns, mut aggregated) = match &q.select {
        SelectList::All => {
            binder.referenced.iter_mut().for_each(|r| *r = true);
            (None, t.columns().to_vec(), false)
        }
        SelectList::Items(items) => {
            let mut bound = Vec::with_capacity(items.len());
            for i in items {
                bound.push(binder.bind(&i.expr, Clause::Select, false)?);
            }
            let agg = items.iter().any(|i| i.expr.contains_aggregate());
            (
                Some(bound),
                items.iter().map(|i| i.output_name()).collect(),
                agg,
            )
        }
    };
    let filter = match &q.filter {
        Some(f) => Some(binder.bind(f, Clause::Filter, false)?),
        None => None,
    };
    let group_by = q
        .group_by
        .iter()
        .map(|g| binder.bind(g, Clause::Group, false))
        .collect::<Result<Vec<_>, _>>()?;
    let mut order_by = Vec::with_capacity(q.order_by.len());
    for o in &q.order_by {
        let b = match resolve_order_alias(q, t, &o.expr, projections.as_deref()) {
            Some(b) => b,
            None => binder.bind(&o.expr, Clause::Order, false)?,
        };
        aggregated |= o.expr.contains_aggregate();
        order_by.push((b, o.descending));
    }
    aggregated |= !group_by.is_empty();
    Ok(Plan {
        projections,
        columns,
        filter,
        group_by,
        order_by,
        aggregated,
        referenced: binder.referenced,
    })
}

/// ORDER BY may name a select alias or a 1-based select position.
fn resolve_order_alias(
    q: &Query,
    t: &Table,
    e: &Expr,
    projections: Option<&[Bound]>,
) -> Option<Bound> {
    match e {
        Expr::Column(name) | Expr::Quoted(name) => {
            if t.resolve_column(name).is_some() || name.eq_ignore_ascii_case(ROW_ID) {
                return None;
            }
            let SelectList::Items(items) = &q.select else {
                return None;
            };
            let idx = items.iter().position(|i| {
                i.alias
                    .as_deref()
                    .is_some_and(|a| a.eq_ignore_ascii_case(name))
            })?;
            projections.map(|p| p[idx].clone())
        }
        Expr::Number(n) => {
            let k: usize = n.parse().ok()?;
            if k == 0 {
                return None;
            }
            match projections {
                Some(p) => p.get(k - 1).cloned(),
                None => (k <= t.num_columns()).then_some(Bound::Col(k - 1)),
            }
        }
        _ => None,
    }
}

pub fn execute(q: &Query, t: &Table) -> Result<ResultSet, SqlError> {
    let plan = plan(q, t)?;
    let all: Vec<usize> = (0..t.num_rows()).collect();
    let filtered: Vec<usize> = match &plan.filter {
        Some(f) => all
            .iter()
            .copied()
            .filter(|&r| {
                truthy(&eval(
                    f,
                    &Ctx {
                        table: t,
                        row: Some(r),
                        group: &[],
                    },
                ))
            })
            .collect(),
        None => all,
    };

    let groups: Vec<Vec<usize>> = if !plan.aggregated {
        filtered.iter().map(|&r| vec![r]).collect()
    } else if plan.group_by.is_empty() {
        vec![filtered]
    } else {
        let mut index: HashMap<Vec<String>, usize> = HashMap::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for r in filtered {
            let ctx = Ctx {
                table: t,
                row: Some(r),
                group: &[],
            };
            let key: Vec<String> = plan
                .group_by
                .iter()
                .map(|g| eval(g, &ctx).render().to_string())
                .collect();
            match index.get(&key) {
                Some(&g) => groups[g].push(r),
                None => {
                    index.insert(key, groups.len());
                    groups.push(vec![r]);
                }
            }
        }
        groups
    };

    let mut out: Vec<(Vec<CellValue>, ResultRow)> = groups
        .iter()
        .map(|g| {
            let ctx = Ctx {
                table: t,
                row: g.first().copied(),
                group: g,
            };
            let values = match &plan.projections {
                Some(p) => p.iter().map(|b| eval(b, &ctx)).collect(),
                None => ctx
                    .row
                    .map(|r| t.rows()[r].cells.clone())
                    .unwrap_or_else(|| vec![CellValue::Empty; t.num_columns()]),
            };
            let keys = plan.order_by.iter().map(|(b, _)| eval(b, &ctx)).collect();
            let source_row_ids = g.iter().map(|&r| t.rows()[r].id).collect();
            (
                keys,
                ResultRow {
                    source_row_ids,
                    values,
                },
            )
        })
        .collect();

    if !plan.order_by.is_empty() {
        out.sort_by(|(ka, _), (kb, _)| {
            for (i, (_, desc)) in plan.order_by.iter().enumerate() {
                let o = sort_order(&ka[i], &kb[i]);
                let o = if *desc { o.reverse() } else { o };
                if o != Ordering::Equal {
                    return o;
                }
            }
            Ordering::Equal
        });
    }
    let mut rows: Vec<ResultRow> = out.into_iter().map(|(_, r)| r).collect();
    if let Some(n) = q.limit {
        rows.truncate(n as usize);
    }
    Ok(ResultSet {
        columns: plan.columns,
        rows,
    })
}

/// Table columns a query touches anywhere, in table order, excluding
/// `row_id`. Fails the same way binding does.
pub fn referenced_columns(q: &Query, t: &Table) -> Result<ColumnSet, SqlError> {
    let plan = plan(q, t)?;
    Ok(ColumnSet::new(
        t.columns()
            .iter()
            .zip(plan.referenced)
            .filter(|(_, r)| *r)
            .map(|(c, _)| c.clone()),
    ))
}

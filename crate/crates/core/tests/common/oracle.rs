//! Brute-force reference evaluator for the query engine. Queries are drawn
//! from a small grammar as a test-owned AST, rendered to SQL for the
//! engine, and evaluated here directly over the raw cell strings.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use tabreason::sql::ResultSet;
use tabreason::table::{CellValue, RawTable};

const NAMES: [&str; 9] = ["id", "name", "score", "home team", "year", "note", "pts", "club name", "rank"];
const CELLS: [&str; 16] = [
    "", "0", "1", "2", "3", "10", "-4", "2.5", "1,200", "apple", "Apple", "banana", "b", "x y", "10", "3",
];
const WORDS: [&str; 7] = ["apple", "banana", "b", "x y", "APPLE", "zebra", ""];
const NUMS: [&str; 8] = ["0", "1", "2", "3", "10", "2.5", "1200", "-4"];

#[derive(Debug, Clone, PartialEq)]
pub enum Lit {
    Num(String),
    Str(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Operand {
    Col(usize),
    RowId,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Pred {
    Cmp(Operand, CmpOp, Lit),
    ColCmp(usize, CmpOp, usize),
    Like(usize, String, bool),
    In(Operand, Vec<Lit>, bool),
    Between(Operand, Lit, Lit, bool),
    IsNull(usize, bool),
    Not(Box<Pred>),
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AggF {
    CountStar,
    Count,
    Sum,
    Avg,
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Col(usize),
    RowId,
    Add(usize, String),
    Agg(AggF, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenQuery {
    /// `None` is `SELECT *`.
    pub items: Option<Vec<Item>>,
    pub filter: Option<Pred>,
    pub group_by: Option<usize>,
    pub order_by: Vec<(Operand, bool)>,
    pub limit: Option<usize>,
}

/// A value as the oracle sees it. Numbers keep their source text, which is
/// what text comparison and ordering look at.
#[derive(Debug, Clone, PartialEq)]
pub enum V {
    Null,
    Num(f64, String),
    Text(String),
}

impl V {
    fn text(&self) -> &str {
        match self {
            V::Null => "",
            V::Num(_, s) | V::Text(s) => s,
        }
    }

    fn num(&self) -> Option<f64> {
        match self {
            V::Num(n, _) => Some(*n),
            V::Text(s) => number(s),
            V::Null => None,
        }
    }

    fn computed(x: f64) -> V {
        let s = if x.fract() == 0.0 && x.abs() < 1e15 {
            format!("{}", x as i64)
        } else {
            format!("{x}")
        };
        V::Num(x, if s == "-0" { "0".into() } else { s })
    }

}

/// Optional sign, digits with optional thousands grouping, optional
/// fraction, at least one digit.
pub fn number(raw: &str) -> Option<f64> {
    let s = raw.trim();
    let body = s.strip_prefix('+').or_else(|| s.strip_prefix('-')).unwrap_or(s);
    let mut parts = body.splitn(2, '.');
    let int = parts.next().unwrap_or("");
    let frac = parts.next();
    let digits = |x: &str| x.chars().all(|c| c.is_ascii_digit());
    if let Some(f) = frac {
        if !digits(f) {
            return None;
        }
    }
    if int.is_empty() && frac.is_none_or(str::is_empty) {
        return None;
    }
    let int_ok = if int.contains(',') {
        let groups: Vec<&str> = int.split(',').collect();
        (1..=3).contains(&groups[0].len())
            && groups.iter().all(|g| digits(g))
            && groups[1..].iter().all(|g| g.len() == 3)
    } else {
        digits(int)
    };
    if !int_ok {
        return None;
    }
    s.replace(',', "").parse().ok()
}

pub fn cell(raw: &str) -> V {
    let t = raw.trim();
    if t.is_empty() {
        V::Null
    } else if let Some(n) = number(t) {
        V::Num(n, t.to_string())
    } else {
        V::Text(t.to_string())
    }
}

fn lit(l: &Lit) -> V {
    match l {
        Lit::Num(s) => V::Num(s.parse().unwrap(), s.clone()),
        Lit::Str(s) => V::Text(s.clone()),
    }
}

fn compare(a: &V, b: &V) -> Ordering {
    match (a.num(), b.num()) {
        (Some(x), Some(y)) => x.partial_cmp(&y).unwrap(),
        _ => a.text().to_lowercase().cmp(&b.text().to_lowercase()),
    }
}

fn holds(op: CmpOp, o: Ordering) -> bool {
    match op {
        CmpOp::Eq => o.is_eq(),
        CmpOp::Ne => o.is_ne(),
        CmpOp::Lt => o.is_lt(),
        CmpOp::Le => o.is_le(),
        CmpOp::Gt => o.is_gt(),
        CmpOp::Ge => o.is_ge(),
    }
}

/// Backtracking LIKE: `%` any run, `_` one char, case-insensitive.
fn like(text: &[char], pat: &[char]) -> bool {
    match pat.split_first() {
        None => text.is_empty(),
        Some(('%', rest)) => (0..=text.len()).any(|k| like(&text[k..], rest)),
        Some(('_', rest)) => !text.is_empty() && like(&text[1..], rest),
        Some((c, rest)) => text.first() == Some(c) && like(&text[1..], rest),
    }
}

pub struct Grid {
    pub header: Vec<String>,
    pub rows: Vec<Vec<V>>,
}

impl Grid {
    pub fn from_raw(t: &RawTable) -> Grid {
        Grid {
            header: t.header.clone(),
            rows: t.rows.iter().map(|r| r.iter().map(|c| cell(c)).collect()).collect(),
        }
    }

    fn operand(&self, o: Operand, r: usize) -> V {
        match o {
            Operand::Col(c) => self.rows[r][c].clone(),
            Operand::RowId => V::computed((r + 1) as f64),
        }
    }

    fn test(&self, p: &Pred, r: usize) -> bool {
        match p {
            Pred::Cmp(o, op, l) => holds(*op, compare(&self.operand(*o, r), &lit(l))),
            Pred::ColCmp(a, op, b) => holds(*op, compare(&self.rows[r][*a], &self.rows[r][*b])),
            Pred::Like(c, pat, neg) => {
                let t: Vec<char> = self.rows[r][*c].text().to_lowercase().chars().collect();
                let p: Vec<char> = pat.to_lowercase().chars().collect();
                like(&t, &p) != *neg
            }
            Pred::In(o, items, neg) => {
                let v = self.operand(*o, r);
                items.iter().any(|l| compare(&v, &lit(l)).is_eq()) != *neg
            }
            Pred::Between(o, lo, hi, neg) => {
                let v = self.operand(*o, r);
                (compare(&v, &lit(lo)).is_ge() && compare(&v, &lit(hi)).is_le()) != *neg
            }
            Pred::IsNull(c, neg) => (self.rows[r][*c] == V::Null) != *neg,
            Pred::Not(x) => !self.test(x, r),
            Pred::And(a, b) => self.test(a, r) && self.test(b, r),
            Pred::Or(a, b) => self.test(a, r) || self.test(b, r),
        }
    }

    fn agg(&self, f: AggF, c: usize, group: &[usize]) -> V {
        if f == AggF::CountStar {
            return V::computed(group.len() as f64);
        }
        let vals: Vec<&V> = group.iter().map(|&r| &self.rows[r][c]).collect();
        if f == AggF::Count {
            return V::computed(vals.iter().filter(|v| ***v != V::Null).count() as f64);
        }
        let nums: Vec<f64> = vals.iter().filter_map(|v| v.num()).collect();
        if nums.is_empty() {
            return V::Null;
        }
        let mut acc = nums[0];
        for &x in &nums[1..] {
            acc = match f {
                AggF::Sum | AggF::Avg => acc + x,
                AggF::Min => acc.min(x),
                AggF::Max => acc.max(x),
                _ => unreachable!(),
            };
        }
        if f == AggF::Avg {
            acc /= nums.len() as f64;
        }
        V::computed(acc)
    }

    fn item(&self, it: &Item, group: &[usize]) -> V {
        let first = group.first().copied();
        match it {
            Item::Col(c) => first.map(|r| self.rows[r][*c].clone()).unwrap_or(V::Null),
            Item::RowId => first.map(|r| V::computed((r + 1) as f64)).unwrap_or(V::Null),
            Item::Add(c, n) => match first.and_then(|r| self.rows[r][*c].num()) {
                Some(x) => V::computed(x + n.parse::<f64>().unwrap()),
                None => V::Null,
            },
            Item::Agg(f, c) => self.agg(*f, *c, group),
        }
    }
}

fn order_class(v: &V) -> u8 {
    match v {
        V::Null => 0,
        _ if v.num().is_some() => 1,
        _ => 2,
    }
}

fn order_cmp(a: &V, b: &V) -> Ordering {
    order_class(a).cmp(&order_class(b)).then_with(|| match (a.num(), b.num()) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        _ => a
            .text()
            .to_lowercase()
            .cmp(&b.text().to_lowercase())
            .then_with(|| a.text().cmp(b.text())),
    })
}

/// A comparable view of one output row: values plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct OutRow {
    pub values: Vec<V>,
    pub ids: BTreeSet<u32>,
}

pub fn evaluate(g: &Grid, q: &GenQuery) -> Vec<OutRow> {
    let kept: Vec<usize> = (0..g.rows.len())
        .filter(|&r| q.filter.as_ref().is_none_or(|p| g.test(p, r)))
        .collect();
    let aggregated = q.group_by.is_some()
        || q.items
            .as_ref()
            .is_some_and(|its| its.iter().any(|i| matches!(i, Item::Agg(..))));
    let groups: Vec<Vec<usize>> = match (aggregated, q.group_by) {
        (false, _) => kept.iter().map(|&r| vec![r]).collect(),
        (true, None) => vec![kept],
        (true, Some(c)) => {
            let mut gs: Vec<(String, Vec<usize>)> = Vec::new();
            for r in kept {
                let key = g.rows[r][c].text().to_string();
                match gs.iter_mut().find(|(k, _)| *k == key) {
                    Some((_, v)) => v.push(r),
                    None => gs.push((key, vec![r])),
                }
            }
            gs.into_iter().map(|(_, v)| v).collect()
        }
    };
    let mut rows: Vec<(Vec<V>, OutRow)> = groups
        .iter()
        .map(|grp| {
            let values = match &q.items {
                None => g.rows[grp[0]].clone(),
                Some(its) => its.iter().map(|i| g.item(i, grp)).collect(),
            };
            let keys = q
                .order_by
                .iter()
                .map(|(o, _)| grp.first().map(|&r| g.operand(*o, r)).unwrap_or(V::Null))
                .collect();
            let ids = grp.iter().map(|&r| (r + 1) as u32).collect();
            (keys, OutRow { values, ids })
        })
        .collect();
    // stable insertion sort
    for i in 1..rows.len() {
        let mut j = i;
        while j > 0 {
            let ord = q
                .order_by
                .iter()
                .enumerate()
                .map(|(k, (_, desc))| {
                    let o = order_cmp(&rows[j - 1].0[k], &rows[j].0[k]);
                    if *desc {
                        o.reverse()
                    } else {
                        o
                    }
                })
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal);
            if ord.is_gt() {
                rows.swap(j - 1, j);
                j -= 1;
            } else {
                break;
            }
        }
    }
    let mut out: Vec<OutRow> = rows.into_iter().map(|(_, r)| r).collect();
    if let Some(n) = q.limit {
        out.truncate(n);
    }
    out
}

/// Canonical comparison value: numbers by value, text by content.
#[derive(Debug, Clone, PartialEq)]
pub enum Canon {
    Null,
    Num(f64),
    Text(String),
}

pub fn canon_oracle(v: &V) -> Canon {
    match v {
        V::Null => Canon::Null,
        other => match other.num() {
            Some(n) => Canon::Num(n),
            None => Canon::Text(other.text().to_string()),
        },
    }
}

pub fn canon_engine(v: &CellValue) -> Canon {
    match v {
        CellValue::Empty => Canon::Null,
        other => match other.as_number() {
            Some(n) => Canon::Num(n),
            None => Canon::Text(other.render().to_string()),
        },
    }
}

fn canon_eq(a: &Canon, b: &Canon) -> bool {
    match (a, b) {
        (Canon::Num(x), Canon::Num(y)) => (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0),
        _ => a == b,
    }
}

/// `None` when the engine output matches the oracle, otherwise a
/// description of the first difference.
pub fn diff(expected: &[OutRow], got: &ResultSet) -> Option<String> {
    if expected.len() != got.rows.len() {
        return Some(format!("row count {} vs engine {}", expected.len(), got.rows.len()));
    }
    for (i, (e, g)) in expected.iter().zip(&got.rows).enumerate() {
        let gv: Vec<Canon> = g.values.iter().map(canon_engine).collect();
        let ev: Vec<Canon> = e.values.iter().map(canon_oracle).collect();
        if ev.len() != gv.len() || !ev.iter().zip(&gv).all(|(a, b)| canon_eq(a, b)) {
            return Some(format!("row {i}: oracle {ev:?} vs engine {gv:?}"));
        }
        let gi: BTreeSet<u32> = g.source_row_ids.iter().collect();
        if gi != e.ids {
            return Some(format!("row {i} provenance: oracle {:?} vs engine {gi:?}", e.ids));
        }
    }
    None
}

// ---- rendering ----

fn ident(name: &str) -> String {
    if name.chars().all(|c| c.is_ascii_lowercase() || c == '_') {
        name.to_string()
    } else {
        format!("\"{name}\"")
    }
}

fn render_lit(l: &Lit) -> String {
    match l {
        Lit::Num(s) => s.clone(),
        Lit::Str(s) => format!("'{s}'"),
    }
}

fn render_op(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Eq => "=",
        CmpOp::Ne => "!=",
        CmpOp::Lt => "<",
        CmpOp::Le => "<=",
        CmpOp::Gt => ">",
        CmpOp::Ge => ">=",
    }
}

fn not_kw(neg: bool) -> &'static str {
    if neg {
        "NOT "
    } else {
        ""
    }
}

pub fn render(q: &GenQuery, header: &[String]) -> String {
    let col = |c: usize| ident(&header[c]);
    let operand = |o: Operand| match o {
        Operand::Col(c) => col(c),
        Operand::RowId => "row_id".to_string(),
    };
    fn pred(p: &Pred, col: &dyn Fn(usize) -> String, operand: &dyn Fn(Operand) -> String) -> String {
        match p {
            Pred::Cmp(o, op, l) => format!("{} {} {}", operand(*o), render_op(*op), render_lit(l)),
            Pred::ColCmp(a, op, b) => format!("{} {} {}", col(*a), render_op(*op), col(*b)),
            Pred::Like(c, pat, neg) => format!("{} {}LIKE '{pat}'", col(*c), not_kw(*neg)),
            Pred::In(o, items, neg) => format!(
                "{} {}IN ({})",
                operand(*o),
                not_kw(*neg),
                items.iter().map(render_lit).collect::<Vec<_>>().join(", ")
            ),
            Pred::Between(o, lo, hi, neg) => format!(
                "{} {}BETWEEN {} AND {}",
                operand(*o),
                not_kw(*neg),
                render_lit(lo),
                render_lit(hi)
            ),
            Pred::IsNull(c, neg) => format!("{} IS {}NULL", col(*c), not_kw(*neg)),
            Pred::Not(x) => format!("NOT ({})", pred(x, col, operand)),
            Pred::And(a, b) => format!("({}) AND ({})", pred(a, col, operand), pred(b, col, operand)),
            Pred::Or(a, b) => format!("({}) OR ({})", pred(a, col, operand), pred(b, col, operand)),
        }
    }
    let items = match &q.items {
        None => "*".to_string(),
        Some(its) => its
            .iter()
            .map(|i| match i {
                Item::Col(c) => col(*c),
                Item::RowId => "row_id".into(),
                Item::Add(c, n) => format!("{} + {n}", col(*c)),
                Item::Agg(AggF::CountStar, _) => "COUNT(*)".into(),
                Item::Agg(f, c) => {
                    let name = match f {
                        AggF::Count => "COUNT",
                        AggF::Sum => "SUM",
                        AggF::Avg => "AVG",
                        AggF::Min => "MIN",
                        AggF::Max => "MAX",
                        AggF::CountStar => unreachable!(),
                    };
                    format!("{name}({})", col(*c))
                }
            })
            .collect::<Vec<_>>()
            .join(", "),
    };
    let mut sql = format!("SELECT {items} FROM w");
    if let Some(p) = &q.filter {
        sql += &format!(" WHERE {}", pred(p, &col, &operand));
    }
    if let Some(c) = q.group_by {
        sql += &format!(" GROUP BY {}", col(c));
    }
    if !q.order_by.is_empty() {
        let keys: Vec<String> = q
            .order_by
            .iter()
            .map(|(o, d)| format!("{}{}", operand(*o), if *d { " DESC" } else { "" }))
            .collect();
        sql += &format!(" ORDER BY {}", keys.join(", "));
    }
    if let Some(n) = q.limit {
        sql += &format!(" LIMIT {n}");
    }
    sql
}

// ---- generation ----

pub fn gen_table(rng: &mut StdRng) -> RawTable {
    let ncols = rng.random_range(1..=6);
    let nrows = rng.random_range(0..=8);
    let mut names: Vec<&str> = NAMES.to_vec();
    let mut header = Vec::new();
    for _ in 0..ncols {
        let k = rng.random_range(0..names.len());
        header.push(names.remove(k).to_string());
    }
    let rows = (0..nrows)
        .map(|_| (0..ncols).map(|_| CELLS.choose(rng).unwrap().to_string()).collect())
        .collect();
    RawTable {
        caption: None,
        header,
        rows,
    }
}

fn gen_lit(rng: &mut StdRng) -> Lit {
    if rng.random_bool(0.5) {
        Lit::Num(NUMS.choose(rng).unwrap().to_string())
    } else {
        Lit::Str(WORDS.choose(rng).unwrap().to_string())
    }
}

fn gen_operand(rng: &mut StdRng, ncols: usize) -> Operand {
    if rng.random_bool(0.15) {
        Operand::RowId
    } else {
        Operand::Col(rng.random_range(0..ncols))
    }
}

fn gen_op(rng: &mut StdRng) -> CmpOp {
    *[CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge]
        .choose(rng)
        .unwrap()
}

fn gen_pattern(rng: &mut StdRng) -> String {
    let base: Vec<char> = CELLS.choose(rng).unwrap().chars().collect();
    let mut out = String::new();
    if rng.random_bool(0.4) {
        out.push('%');
    }
    for c in base {
        match rng.random_range(0..6) {
            0 => out.push('_'),
            1 => out.push('%'),
            _ => out.push(c),
        }
    }
    if rng.random_bool(0.4) {
        out.push('%');
    }
    out
}

fn gen_pred(rng: &mut StdRng, ncols: usize, depth: u32) -> Pred {
    let leaf = depth == 0 || rng.random_bool(0.55);
    if !leaf {
        let a = Box::new(gen_pred(rng, ncols, depth - 1));
        return match rng.random_range(0..3) {
            0 => Pred::Not(a),
            1 => Pred::And(a, Box::new(gen_pred(rng, ncols, depth - 1))),
            _ => Pred::Or(a, Box::new(gen_pred(rng, ncols, depth - 1))),
        };
    }
    let c = rng.random_range(0..ncols);
    match rng.random_range(0..6) {
        0 => Pred::Cmp(gen_operand(rng, ncols), gen_op(rng), gen_lit(rng)),
        1 => Pred::ColCmp(c, gen_op(rng), rng.random_range(0..ncols)),
        2 => Pred::Like(c, gen_pattern(rng), rng.random_bool(0.3)),
        3 => {
            let n = rng.random_range(1..=3);
            Pred::In(gen_operand(rng, ncols), (0..n).map(|_| gen_lit(rng)).collect(), rng.random_bool(0.3))
        }
        4 => Pred::Between(gen_operand(rng, ncols), gen_lit(rng), gen_lit(rng), rng.random_bool(0.3)),
        _ => Pred::IsNull(c, rng.random_bool(0.5)),
    }
}

fn gen_agg(rng: &mut StdRng, ncols: usize) -> Item {
    let f = *[AggF::CountStar, AggF::Count, AggF::Sum, AggF::Avg, AggF::Min, AggF::Max]
        .choose(rng)
        .unwrap();
    Item::Agg(f, rng.random_range(0..ncols))
}

pub fn gen_query(rng: &mut StdRng, ncols: usize) -> GenQuery {
    let filter = rng.random_bool(0.75).then(|| gen_pred(rng, ncols, 2));
    let limit = rng.random_bool(0.25).then(|| rng.random_range(0..5));
    match rng.random_range(0..5) {
        0 => {
            let n = rng.random_range(1..=3);
            GenQuery {
                items: Some((0..n).map(|_| gen_agg(rng, ncols)).collect()),
                filter,
                group_by: None,
                order_by: vec![],
                limit,
            }
        }
        1 => {
            let g = rng.random_range(0..ncols);
            let mut items = vec![Item::Col(g)];
            items.extend((0..rng.random_range(1..=2)).map(|_| gen_agg(rng, ncols)));
            GenQuery {
                items: Some(items),
                filter,
                group_by: Some(g),
                order_by: if rng.random_bool(0.5) {
                    vec![(Operand::Col(g), rng.random_bool(0.5))]
                } else {
                    vec![]
                },
                limit,
            }
        }
        _ => {
            let items = if rng.random_bool(0.3) {
                None
            } else {
                let n = rng.random_range(1..=3);
                Some(
                    (0..n)
                        .map(|_| match rng.random_range(0..6) {
                            0 => Item::RowId,
                            1 => Item::Add(rng.random_range(0..ncols), NUMS[rng.random_range(0..5)].to_string()),
                            _ => Item::Col(rng.random_range(0..ncols)),
                        })
                        .collect(),
                )
            };
            let nkeys = rng.random_range(0..=2);
            GenQuery {
                items,
                filter,
                group_by: None,
                order_by: (0..nkeys).map(|_| (gen_operand(rng, ncols), rng.random_bool(0.5))).collect(),
                limit,
            }
        }
    }
}

/// One random case from a seed: table, query and its SQL text.
pub fn gen_case(seed: u64) -> (RawTable, GenQuery, String) {
    let mut rng = StdRng::seed_from_u64(seed);
    let t = gen_table(&mut rng);
    let q = gen_query(&mut rng, t.header.len());
    let sql = render(&q, &t.header);
    (t, q, sql)
}

/// Runs one case through both routes.
pub fn check_case(seed: u64) -> Result<(), String> {
    let (raw, q, sql) = gen_case(seed);
    let table = tabreason::table::Table::load(&raw).map_err(|e| format!("table: {e}"))?;
    let got = tabreason::sql::run(&sql, &table).map_err(|e| format!("{sql}: engine error {e}"))?;
    let expected = evaluate(&Grid::from_raw(&raw), &q);
    match diff(&expected, &got) {
        None => Ok(()),
        Some(d) => Err(format!("seed {seed}: {sql}\n  {d}\n  table {:?}", raw.rows)),
    }
}

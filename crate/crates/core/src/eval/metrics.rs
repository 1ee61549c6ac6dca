//! Answer scoring, size buckets and cell statistics.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::extract::CellCounts;
use crate::reason::Verdict;
use crate::table::parse_numeric;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("no records")]
    NoRecords,
}

const QUOTES: [char; 6] = ['"', '\'', '`', '\u{201c}', '\u{201d}', '\u{2019}'];

/// Canonical form used by [`exact_match`].
pub fn normalize_answer(s: &str) -> String {
    let mut t: String = s.nfkc().collect::<String>().to_lowercase();
    loop {
        let trimmed = t.trim();
        let mut chars = trimmed.chars();
        let (first, last) = (chars.next(), chars.next_back());
        match (first, last) {
            (Some(a), Some(b)) if QUOTES.contains(&a) && QUOTES.contains(&b) => {
                t = trimmed[a.len_utf8()..trimmed.len() - b.len_utf8()].to_string();
            }
            _ => {
                t = trimmed.to_string();
                break;
            }
        }
    }
    if let Some(stripped) = t.strip_suffix('.') {
        t = stripped.trim_end().to_string();
    }
    t.split_whitespace()
        .map(|tok| {
            if tok.contains(',') && parse_numeric(tok).is_some() {
                tok.replace(',', "")
            } else {
                tok.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn values_match(a: &str, b: &str) -> bool {
    if a == b {
        return true;
    }
    match (parse_numeric(a), parse_numeric(b)) {
        (Some(x), Some(y)) => {
            let scale = x.abs().max(y.abs());
            (x - y).abs() <= 1e-6 * scale
        }
        _ => false,
    }
}

/// Normalized equality; `|` separates the items of a multi-part answer,
/// which must match as sets.
pub fn exact_match(pred: &str, gold: &str) -> bool {
    let parts = |s: &str| -> Vec<String> {
        s.split('|')
            .map(normalize_answer)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    };
    let p = parts(pred);
    let g = parts(gold);
    p.iter().all(|x| g.iter().any(|y| values_match(x, y)))
        && g.iter().all(|y| p.iter().any(|x| values_match(x, y)))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    const ONE: Prf = Prf {
        precision: 1.0,
        recall: 1.0,
        f1: 1.0,
    };

    fn from_overlap(overlap: usize, pred: usize, gold: usize) -> Prf {
        if pred == 0 || gold == 0 {
            return Prf::default();
        }
        let precision = overlap as f64 / pred as f64;
        let recall = overlap as f64 / gold as f64;
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Prf {
            precision,
            recall,
            f1,
        }
    }
}

/// Lowercased alphanumeric runs.
pub fn rouge_tokens(s: &str) -> Vec<String> {
    s.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

/// ROUGE-N with multiset n-gram overlap. Two empty strings score 1, one
/// empty side scores 0.
pub fn rouge_n(pred: &str, gold: &str, n: usize) -> Prf {
    let p = rouge_tokens(pred);
    let g = rouge_tokens(gold);
    if p.is_empty() && g.is_empty() {
        return Prf::ONE;
    }
    let pc = ngram_counts(&p, n);
    let gc = ngram_counts(&g, n);
    let overlap = pc
        .iter()
        .map(|(k, &c)| c.min(gc.get(k).copied().unwrap_or(0)))
        .sum();
    Prf::from_overlap(overlap, pc.values().sum(), gc.values().sum())
}

pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L from the longest common token subsequence.
pub fn rouge_l(pred: &str, gold: &str) -> Prf {
    let p = rouge_tokens(pred);
    let g = rouge_tokens(gold);
    if p.is_empty() && g.is_empty() {
        return Prf::ONE;
    }
    Prf::from_overlap(lcs_len(&p, &g), p.len(), g.len())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeScores {
    pub rouge1: Prf,
    pub rouge2: Prf,
    pub rouge_l: Prf,
}

pub fn rouge_all(pred: &str, gold: &str) -> RougeScores {
    RougeScores {
        rouge1: rouge_n(pred, gold, 1),
        rouge2: rouge_n(pred, gold, 2),
        rouge_l: rouge_l(pred, gold),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeBucket {
    Small,
    Medium,
    Large,
}

impl SizeBucket {
    pub const ALL: [SizeBucket; 3] = [SizeBucket::Small, SizeBucket::Medium, SizeBucket::Large];

    pub fn as_str(self) -> &'static str {
        match self {
            SizeBucket::Small => "small",
            SizeBucket::Medium => "medium",
            SizeBucket::Large => "large",
        }
    }
}

impl fmt::Display for SizeBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Small is below `small_below`, large is above `large_above`, and both
/// boundaries themselves are medium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    pub small_below: usize,
    pub large_above: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            small_below: 2000,
            large_above: 4000,
        }
    }
}

impl Thresholds {
    pub fn bucket(&self, tokens: usize) -> SizeBucket {
        if tokens < self.small_below {
            SizeBucket::Small
        } else if tokens > self.large_above {
            SizeBucket::Large
        } else {
            SizeBucket::Medium
        }
    }
}

pub fn bucket(tokens: usize) -> SizeBucket {
    Thresholds::default().bucket(tokens)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub avg_t: f64,
    pub avg_t_c: f64,
    pub avg_t_cr: f64,
}

pub fn cell_reduction_stats<'a, I>(counts: I) -> Result<CellStats, MetricError>
where
    I: IntoIterator<Item = &'a CellCounts>,
{
    let (mut n, mut t, mut tc, mut tcr) = (0usize, 0usize, 0usize, 0usize);
    for c in counts {
        n += 1;
        t += c.t;
        tc += c.t_c;
        tcr += c.t_cr;
    }
    if n == 0 {
        return Err(MetricError::NoRecords);
    }
    let avg = |x: usize| x as f64 / n as f64;
    Ok(CellStats {
        avg_t: avg(t),
        avg_t_c: avg(tc),
        avg_t_cr: avg(tcr),
    })
}

/// Fraction of `(predicted, gold)` pairs that agree; abstentions never do.
pub fn tabfact_accuracy(pairs: &[(Verdict, Verdict)]) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::NoRecords);
    }
    let hits = pairs
        .iter()
        .filter(|(p, g)| *p != Verdict::Abstain && p == g)
        .count();
    Ok(hits as f64 / pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn exact_match_cases() {
        assert!(exact_match("16", "16.0"));
        assert!(exact_match("Entailed", "entailed"));
        assert!(!exact_match("16 years", "16"));
        assert!(exact_match("\"1,234\"", "1234"));
        assert!(exact_match("Paris.", "paris"));
        assert!(exact_match("b | a", "a|b"));
        assert!(!exact_match("a", "a|b"));
        assert!(exact_match("ｆｕｌｌ  width", "full width"));
        assert!(exact_match("", ""));
    }

    #[test]
    fn rouge_hand_cases() {
        let r = rouge_n("a b c", "a c d", 1);
        assert!(close(r.precision, 2.0 / 3.0) && close(r.recall, 2.0 / 3.0) && close(r.f1, 2.0 / 3.0));
        assert_eq!(rouge_n("a b", "b a", 2).f1, 0.0);
        let l = rouge_l("a x b", "a b y");
        assert!(close(l.precision, 2.0 / 3.0) && close(l.recall, 2.0 / 3.0));
        assert_eq!(rouge_l("", "a b"), Prf::default());
        assert_eq!(rouge_l("", ""), Prf::ONE);
        assert_eq!(rouge_n("same words", "same words", 2).f1, 1.0);
    }

    #[test]
    fn bucket_boundaries() {
        let got: Vec<SizeBucket> = [0, 1999, 2000, 4000, 4001, 1_000_000]
            .into_iter()
            .map(bucket)
            .collect();
        use SizeBucket::*;
        assert_eq!(got, [Small, Small, Medium, Medium, Large, Large]);
    }

    #[test]
    fn cell_stats() {
        assert_eq!(cell_reduction_stats(&[]), Err(MetricError::NoRecords));
        let one = [CellCounts {
            t: 159,
            t_c: 40,
            t_cr: 18,
        }];
        let s = cell_reduction_stats(&one).unwrap();
        assert_eq!((s.avg_t, s.avg_t_cr), (159.0, 18.0));
        let two = [
            CellCounts { t: 10, t_c: 6, t_cr: 2 },
            CellCounts { t: 20, t_c: 8, t_cr: 4 },
        ];
        let s = cell_reduction_stats(&two).unwrap();
        assert_eq!((s.avg_t, s.avg_t_c, s.avg_t_cr), (15.0, 7.0, 3.0));
    }

    #[test]
    fn accuracy() {
        use Verdict::*;
        assert_eq!(tabfact_accuracy(&[]), Err(MetricError::NoRecords));
        let pairs = [
            (Entailed, Entailed),
            (Refuted, Refuted),
            (Entailed, Entailed),
            (Refuted, Refuted),
            (Abstain, Refuted),
        ];
        assert!(close(tabfact_accuracy(&pairs).unwrap(), 0.8));
    }
}

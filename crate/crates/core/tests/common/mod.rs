#![allow(dead_code)]

pub mod corpus;
pub mod fake_http;
pub mod listings;
pub mod metric_cases;
pub mod oracle;

use std::path::PathBuf;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Longest common subsequence length by trying every subsequence of `a`.
pub fn lcs_brute<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let n = mask.count_ones() as usize;
        if n <= best {
            continue;
        }
        let mut j = 0;
        let embedded = (0..a.len()).filter(|i| mask & (1 << i) != 0).all(|i| {
            while j < b.len() && b[j] != a[i] {
                j += 1;
            }
            let hit = j < b.len();
            j += 1;
            hit
        });
        if embedded {
            best = n;
        }
    }
    best
}

/// Every sequence over `{a, b}` of length at most `max_len`.
pub fn all_sequences(max_len: usize) -> Vec<Vec<&'static str>> {
    let mut out = vec![vec![]];
    let mut frontier: Vec<Vec<&'static str>> = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for t in ["a", "b"] {
                let mut s = s.clone();
                s.push(t);
                next.push(s);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Pairs of sequences on which `tabreason`'s ROUGE-L disagrees with
/// subsequence enumeration.
pub fn rouge_l_mismatches(max_len: usize) -> Vec<(String, String)> {
    let seqs = all_sequences(max_len);
    let mut bad = Vec::new();
    for a in &seqs {
        for b in &seqs {
            let (pa, pb) = (a.join(" "), b.join(" "));
            let got = tabreason::eval::metrics::rouge_l(&pa, &pb);
            let lcs = lcs_brute(a, b) as f64;
            let ok = if a.is_empty() && b.is_empty() {
                got.f1 == 1.0
            } else if a.is_empty() || b.is_empty() {
                got.f1 == 0.0
            } else {
                let (p, r) = (lcs / a.len() as f64, lcs / b.len() as f64);
                let f = if lcs == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
                (got.precision - p).abs() < 1e-9
                    && (got.recall - r).abs() < 1e-9
                    && (got.f1 - f).abs() < 1e-9
            };
            if !ok {
                bad.push((pa, pb));
            }
        }
    }
    bad
}

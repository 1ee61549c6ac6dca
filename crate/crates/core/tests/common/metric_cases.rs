//! Hand-derived metric expectations.

use tabreason::eval::metrics::{exact_match, rouge_l, rouge_n, Prf};

pub const EM_MATCH: [(&str, &str); 6] = [
    ("17", "17"),
    ("17.0", "17"),
    ("  New York  ", "new york"),
    ("'1,500'", "1500"),
    ("Entailed.", "entailed"),
    ("x | y", "y|x"),
];

pub const EM_DIFFER: [(&str, &str); 4] = [("17 years", "17"), ("1936", "1953"), ("x", "x | y"), ("new", "new york")];

/// (pred, gold, n, precision, recall, f1); n = 0 means ROUGE-L.
pub const ROUGE: [(&str, &str, usize, f64, f64, f64); 6] = [
    ("the cat sat down", "the cat sat up", 1, 0.75, 0.75, 0.75),
    ("the cat sat down", "the cat sat up", 2, 2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0),
    ("the the", "the", 1, 0.5, 1.0, 2.0 / 3.0),
    ("a b c d e", "a c x e", 0, 0.6, 0.75, 2.0 * 0.6 * 0.75 / 1.35),
    ("Scored, 17 goals!", "scored 17 goals", 0, 1.0, 1.0, 1.0),
    ("one", "two", 0, 0.0, 0.0, 0.0),
];

fn close(got: Prf, p: f64, r: f64, f: f64) -> bool {
    (got.precision - p).abs() < 1e-9 && (got.recall - r).abs() < 1e-9 && (got.f1 - f).abs() < 1e-9
}

/// Descriptions of every hand case that does not hold.
pub fn failures() -> Vec<String> {
    let mut out = Vec::new();
    for (p, g) in EM_MATCH {
        if !exact_match(p, g) || !exact_match(g, p) {
            out.push(format!("exact_match({p:?}, {g:?}) should hold"));
        }
    }
    for (p, g) in EM_DIFFER {
        if exact_match(p, g) {
            out.push(format!("exact_match({p:?}, {g:?}) should fail"));
        }
    }
    for (p, g, n, pr, rc, f) in ROUGE {
        let got = if n == 0 { rouge_l(p, g) } else { rouge_n(p, g, n) };
        if !close(got, pr, rc, f) {
            out.push(format!("rouge n={n} ({p:?}, {g:?}) = {got:?}"));
        }
    }
    out
}

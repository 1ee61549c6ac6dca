//! Prompt templates and few-shot demonstrations.
//!
//! Templates are plain text with `{slot}` placeholders, filled in a single
//! pass: substituted text is never rescanned, and braces that do not name a
//! known slot are copied through untouched. Built-in templates ship in
//! `templates/`; a directory given at runtime overrides any file it holds.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use crate::llm::Stage;
use crate::profile::TaskKind;

/// Separator line between demonstrations in a few-shot file.
pub const DEMO_SEPARATOR: &str = "=====";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PromptKind {
    ColSql,
    ColText,
    RowSql,
    RowText,
    MathClassify,
    ReasonSql,
    ReasonText(TaskKind),
}

impl PromptKind {
    pub const ALL: [PromptKind; 9] = [
        PromptKind::ColSql,
        PromptKind::ColText,
        PromptKind::RowSql,
        PromptKind::RowText,
        PromptKind::MathClassify,
        PromptKind::ReasonSql,
        PromptKind::ReasonText(TaskKind::FactVerification),
        PromptKind::ReasonText(TaskKind::ShortQa),
        PromptKind::ReasonText(TaskKind::LongQa),
    ];

    pub fn file_stem(self) -> &'static str {
        match self {
            PromptKind::ColSql => "col_sql",
            PromptKind::ColText => "col_text",
            PromptKind::RowSql => "row_sql",
            PromptKind::RowText => "row_text",
            PromptKind::MathClassify => "math_classify",
            PromptKind::ReasonSql => "reason_sql",
            PromptKind::ReasonText(TaskKind::FactVerification) => "reason_text_fact_verification",
            PromptKind::ReasonText(TaskKind::ShortQa) => "reason_text_short_qa",
            PromptKind::ReasonText(TaskKind::LongQa) => "reason_text_long_qa",
        }
    }

    pub fn stage(self) -> Stage {
        match self {
            PromptKind::ColSql => Stage::ColSql,
            PromptKind::ColText => Stage::ColText,
            PromptKind::RowSql => Stage::RowSql,
            PromptKind::RowText => Stage::RowText,
            PromptKind::MathClassify => Stage::MathClassify,
            PromptKind::ReasonSql => Stage::ReasonSql,
            PromptKind::ReasonText(_) => Stage::ReasonText,
        }
    }

    fn builtin(self) -> (&'static str, &'static str) {
        macro_rules! pair {
            ($stem:literal) => {
                (
                    include_str!(concat!("../templates/", $stem, ".txt")),
                    include_str!(concat!("../templates/fewshot/", $stem, ".txt")),
                )
            };
        }
        match self {
            PromptKind::ColSql => pair!("col_sql"),
            PromptKind::ColText => pair!("col_text"),
            PromptKind::RowSql => pair!("row_sql"),
            PromptKind::RowText => pair!("row_text"),
            PromptKind::MathClassify => pair!("math_classify"),
            PromptKind::ReasonSql => pair!("reason_sql"),
            PromptKind::ReasonText(TaskKind::FactVerification) => pair!("reason_text_fact_verification"),
            PromptKind::ReasonText(TaskKind::ShortQa) => pair!("reason_text_short_qa"),
            PromptKind::ReasonText(TaskKind::LongQa) => pair!("reason_text_long_qa"),
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    template: String,
    demos: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Templates {
    entries: BTreeMap<PromptKind, Entry>,
}

/// Values for the named slots of one prompt.
#[derive(Debug, Clone, Default)]
pub struct Slots<'a> {
    pub table: &'a str,
    pub question: &'a str,
    pub prior_selection: &'a str,
    pub evidence: &'a str,
}

impl Templates {
    pub fn builtin() -> Templates {
        let entries = PromptKind::ALL
            .iter()
            .map(|&k| {
                let (t, d) = k.builtin();
                (
                    k,
                    Entry {
                        template: t.to_string(),
                        demos: split_demos(d),
                    },
                )
            })
            .collect();
        Templates { entries }
    }

    /// Built-ins overridden by `<dir>/<stem>.txt` and
    /// `<dir>/fewshot/<stem>.txt` where present.
    pub fn with_overrides(dir: &Path) -> io::Result<Templates> {
        if !dir.is_dir() {
            return Err(io::Error::new(
                io::ErrorKind::NotFound,
                format!("template directory {} not found", dir.display()),
            ));
        }
        let mut t = Templates::builtin();
        for k in PromptKind::ALL {
            let entry = t.entries.get_mut(&k).expect("all kinds present");
            let main = dir.join(format!("{}.txt", k.file_stem()));
            if main.is_file() {
                entry.template = fs::read_to_string(main)?;
            }
            let shots = dir.join("fewshot").join(format!("{}.txt", k.file_stem()));
            if shots.is_file() {
                entry.demos = split_demos(&fs::read_to_string(shots)?);
            }
        }
        Ok(t)
    }

    pub fn demo_count(&self, kind: PromptKind) -> usize {
        self.entries[&kind].demos.len()
    }

    /// Fills the template with the first `examples` demonstrations (fewer
    /// if the file holds fewer).
    pub fn render(&self, kind: PromptKind, examples: usize, slots: &Slots<'_>) -> String {
        let entry = &self.entries[&kind];
        let shots = entry
            .demos
            .iter()
            .take(examples)
            .map(String::as_str)
            .collect::<Vec<_>>()
            .join("\n\n");
        fill(
            &entry.template,
            &[
                ("table", slots.table),
                ("question", slots.question),
                ("prior_selection", slots.prior_selection),
                ("evidence", slots.evidence),
                ("few_shots", &shots),
            ],
        )
    }
}

fn split_demos(text: &str) -> Vec<String> {
    let mut demos = Vec::new();
    let mut cur: Vec<&str> = Vec::new();
    for line in text.lines() {
        if line.trim_end() == DEMO_SEPARATOR {
            push_demo(&mut demos, &cur);
            cur.clear();
        } else {
            cur.push(line);
        }
    }
    push_demo(&mut demos, &cur);
    demos
}

fn push_demo(out: &mut Vec<String>, lines: &[&str]) {
    let text = lines.join("\n");
    let text = text.trim_matches('\n');
    if !text.trim().is_empty() {
        out.push(text.to_string());
    }
}

/// Single-pass `{name}` substitution.
pub fn fill(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find('}').and_then(|close| {
            let name = &after[..close];
            slots
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill_is_single_pass() {
        let out = fill("{a}-{b}-{c}", &[("a", "{b}"), ("b", "x")]);
        assert_eq!(out, "{b}-x-{c}");
        assert_eq!(fill("{", &[]), "{");
        assert_eq!(fill("{{a}}", &[("a", "1")]), "{1}");
    }

    #[test]
    fn builtins_have_enough_demos() {
        let t = Templates::builtin();
        for k in PromptKind::ALL {
            assert!(t.demo_count(k) >= 5, "{} has {}", k.file_stem(), t.demo_count(k));
            let entry = &t.entries[&k];
            assert!(entry.template.contains("{question}"), "{}", k.file_stem());
            assert!(entry.template.contains("{few_shots}"), "{}", k.file_stem());
        }
    }

    #[test]
    fn render_takes_first_k_demos() {
        let t = Templates::builtin();
        let slots = Slots {
            table: "TABLE",
            question: "Q?",
            ..Default::default()
        };
        let zero = t.render(PromptKind::ColSql, 0, &slots);
        let one = t.render(PromptKind::ColSql, 1, &slots);
        let two = t.render(PromptKind::ColSql, 2, &slots);
        assert!(zero.len() < one.len() && one.len() < two.len());
        assert!(two.contains("TABLE") && two.contains("Q?"));
    }

    #[test]
    fn split_ignores_blank_demos() {
        let d = split_demos("a\nb\n=====\n\n=====\nc\n");
        assert_eq!(d, ["a\nb", "c"]);
    }

    #[test]
    fn directory_overrides() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("col_sql.txt"), "X {question} {few_shots}").unwrap();
        fs::create_dir(dir.path().join("fewshot")).unwrap();
        fs::write(dir.path().join("fewshot/col_sql.txt"), "d1\n=====\nd2").unwrap();
        let t = Templates::with_overrides(dir.path()).unwrap();
        let slots = Slots {
            question: "q",
            ..Default::default()
        };
        assert_eq!(t.render(PromptKind::ColSql, 5, &slots), "X q d1\n\nd2");
        assert_eq!(t.demo_count(PromptKind::RowSql), Templates::builtin().demo_count(PromptKind::RowSql));
    }
}

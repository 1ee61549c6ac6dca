//! Answers the same question on an extracted table under each reasoning
//! mode.
//!
//! cargo run --example adaptive_reasoning

use tabreason::llm::{Gateway, Script, ScriptedBackend};
use tabreason::profile::{ModelFamily, Profile, TaskKind};
use tabreason::prompt::Templates;
use tabreason::reason::{default_math_keywords, keyword_math, reason, ReasoningMode};
use tabreason::session::Session;
use tabreason::table::{ColumnSet, RawTable, Table};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/golden");
    let raw: RawTable = serde_json::from_str(&std::fs::read_to_string(format!("{dir}/table.json"))?)?;
    let t = Table::load(&raw)?;
    let t_cr = t
        .filter_columns(&ColumnSet::new(["year", "national cup"]))?
        .filter_rows(&[1, 18].into_iter().collect())?;
    let q = std::fs::read_to_string(format!("{dir}/question.txt"))?;
    let q = q.trim();
    let keywords = default_math_keywords();
    println!("keyword fallback says math: {}", keyword_math(q, &keywords));

    let gateway = Gateway::new(Box::new(ScriptedBackend::new(Script::load(format!("{dir}/script.json"))?)), 1);
    let templates = Templates::builtin();
    let profile = Profile::default_for(ModelFamily::Gpt35, TaskKind::ShortQa);
    for mode in ReasoningMode::ALL {
        let mut s = Session::new(&gateway, &templates, &profile, 3000);
        let trace = reason(&mut s, &t_cr, q, TaskKind::ShortQa, mode, &keywords)?;
        println!("\n[{}]", mode.as_str());
        if let Some(m) = &trace.math {
            println!("  math: {} ({:?})", m.is_math, m.source);
        }
        if let Some(ev) = &trace.evidence {
            println!("  query: {}", ev.query_text.as_deref().unwrap_or("-"));
            println!("  evidence: {} {:?}", ev.outcome.as_str(), ev.first_value());
        }
        println!("  answer: {} (from {:?})", trace.answer.prediction(), trace.answer.source);
        println!("  calls: {}", s.exchanges().len());
    }
    Ok(())
}

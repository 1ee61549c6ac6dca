//! Asks the golden question against a live chat-completions endpoint.
//! Needs OPENAI_API_KEY; does nothing without it.
//!
//! OPENAI_API_KEY=... cargo run --example live_gateway

use tabreason::llm::{Gateway, HttpBackend, HttpConfig};
use tabreason::pipeline::{Pipeline, PipelineOptions};
use tabreason::profile::{ModelFamily, Profile, TaskKind};
use tabreason::prompt::Templates;
use tabreason::table::{RawTable, Table};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = HttpConfig::default();
    if std::env::var(&config.api_key_env).map_or(true, |k| k.is_empty()) {
        println!("{} is not set; skipping", config.api_key_env);
        return Ok(());
    }
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/golden");
    let raw: RawTable = serde_json::from_str(&std::fs::read_to_string(format!("{dir}/table.json"))?)?;
    let question = std::fs::read_to_string(format!("{dir}/question.txt"))?;

    let pipeline = Pipeline::new(
        Gateway::new(Box::new(HttpBackend::new(config)?), 4),
        Templates::builtin(),
        PipelineOptions::default(),
    );
    let profile = Profile::default_for(ModelFamily::Gpt35, TaskKind::ShortQa);
    let out = pipeline.run(&Table::load(&raw)?, question.trim(), TaskKind::ShortQa, &profile)?;
    println!("columns {} rows {}", out.extraction.c_final, out.extraction.r_final);
    println!("answer: {}", out.reasoning.answer.prediction());
    for ex in &out.exchanges {
        println!("{:<14} {} samples, {} ms", ex.stage.as_str(), ex.completions.len(), ex.latency_ms);
    }
    Ok(())
}

//! Sends one rendered prompt through a gateway backed by replay fixtures,
//! then shows what a replay miss looks like.
//!
//! cargo run --example replay_gateway

use tabreason::llm::{fixture_digest, Gateway, ReplayBackend, Stage};
use tabreason::profile::{ModelFamily, Profile, TaskKind};
use tabreason::prompt::{PromptKind, Slots, Templates};
use tabreason::session::Session;
use tabreason::table::{RawTable, Table};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/golden");
    let raw: RawTable = serde_json::from_str(&std::fs::read_to_string(format!("{dir}/table.json"))?)?;
    let table = Table::load(&raw)?;
    let question = std::fs::read_to_string(format!("{dir}/question.txt"))?;

    let gateway = Gateway::new(Box::new(ReplayBackend::new(format!("{dir}/replay"))), 2);
    let templates = Templates::builtin();
    let profile = Profile::default_for(ModelFamily::Gpt35, TaskKind::ShortQa);
    let session = Session::new(&gateway, &templates, &profile, 3000);

    let schema = session.schema(&table);
    let slots = Slots {
        table: &schema.text,
        question: question.trim(),
        prior_selection: "",
        evidence: "",
    };
    let prompt = session.render(PromptKind::ColSql, &slots);
    let params = profile.get(Stage::ColSql).params;
    println!("prompt: {} bytes, fixture {}", prompt.len(), fixture_digest(Stage::ColSql, &prompt));
    println!("params: {params:?}");

    let ex = gateway.complete(Stage::ColSql, &prompt, &params)?;
    for (i, c) in ex.completions.iter().enumerate() {
        println!("sample {i}: {c}");
    }

    let edited = prompt.replace("1936", "1937");
    match gateway.complete(Stage::ColSql, &edited, &params) {
        Ok(_) => println!("unexpected hit"),
        Err(e) => println!("edited prompt: {e} (catastrophic: {})", e.is_catastrophic()),
    }
    Ok(())
}

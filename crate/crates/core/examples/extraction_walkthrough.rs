//! Runs the four extraction stages one at a time with scripted model
//! output and prints each selection.
//!
//! cargo run --example extraction_walkthrough

use tabreason::extract::{col_sql, col_text, row_sql, row_text, extract, ExtractionMode};
use tabreason::llm::{Gateway, Script, ScriptedBackend};
use tabreason::profile::{ModelFamily, Profile, TaskKind};
use tabreason::prompt::Templates;
use tabreason::session::Session;
use tabreason::table::{encode_pipe, RawTable, Table};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/golden");
    let raw: RawTable = serde_json::from_str(&std::fs::read_to_string(format!("{dir}/table.json"))?)?;
    let t = Table::load(&raw)?;
    let q = std::fs::read_to_string(format!("{dir}/question.txt"))?;
    let q = q.trim();

    let gateway = Gateway::new(Box::new(ScriptedBackend::new(Script::load(format!("{dir}/script.json"))?)), 1);
    let templates = Templates::builtin();
    let profile = Profile::default_for(ModelFamily::Gpt35, TaskKind::ShortQa);
    let mut s = Session::new(&gateway, &templates, &profile, 3000);

    let c1 = col_sql(&mut s, &t, q)?;
    println!("column SQL   {:<28} {}", c1.value.to_string(), c1.outcome.as_str());
    let c2 = col_text(&mut s, &t.transpose(), q, &c1.value)?;
    println!("column text  {:<28} {}", c2.value.to_string(), c2.outcome.as_str());
    let cols = t.union_columns(&c1.value, &c2.value);
    let t_c = t.filter_columns(&cols)?;

    let r1 = row_sql(&mut s, &t_c, q)?;
    println!("row SQL      {:<28} {}", r1.value.to_string(), r1.outcome.as_str());
    let r2 = row_text(&mut s, &t_c, q, &r1.value)?;
    println!("row text     {:<28} {}", r2.value.to_string(), r2.outcome.as_str());
    let t_cr = t_c.filter_rows(&r1.value.union(&r2.value))?;
    println!("\n{}\n", encode_pipe(&t_cr));

    for mode in ExtractionMode::ALL {
        let mut s = Session::new(&gateway, &templates, &profile, 3000);
        let (_, trace) = extract(&mut s, &t, q, mode)?;
        let c = trace.cells;
        println!("{:<10} cells {:>3} -> {:>3} -> {:>3}, {} calls", mode.as_str(), c.t, c.t_c, c.t_cr, s.exchanges().len());
    }
    Ok(())
}

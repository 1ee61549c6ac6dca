//! Random tables paired with random, often invalid, model output for the
//! extraction stages.

use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use tabreason::extract::{extract, ExtractionMode, ExtractionTrace};
use tabreason::llm::{Gateway, Script, ScriptedBackend, Stage};
use tabreason::profile::{ModelFamily, Profile, TaskKind};
use tabreason::prompt::Templates;
use tabreason::session::Session;
use tabreason::table::Table;

use super::oracle::{gen_query, gen_table, render};

pub const MODES: [ExtractionMode; 4] = [
    ExtractionMode::Full,
    ExtractionMode::NoColumn,
    ExtractionMode::NoRow,
    ExtractionMode::None,
];

fn sql_completion(rng: &mut StdRng, header: &[String]) -> String {
    match rng.random_range(0..5) {
        0 => "I cannot write a query for this.".into(),
        1 => "SELECT nonexistent FROM w".into(),
        _ => format!("SQL: {}", render(&gen_query(rng, header.len()), header)),
    }
}

fn list_completion(rng: &mut StdRng, key: &str, items: Vec<String>) -> String {
    if rng.random_bool(0.15) {
        return "no list here".into();
    }
    format!("Explanation: because.\n{key}: [{}]", items.join(", "))
}

pub fn script(seed: u64, header: &[String], nrows: usize) -> Script {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut names: Vec<String> = header.iter().map(|h| format!("'{h}'")).collect();
    names.push("'made up'".into());
    let cols: Vec<String> = (0..rng.random_range(0..4))
        .map(|_| names.choose(&mut rng).unwrap().clone())
        .collect();
    let ids: Vec<String> = (0..rng.random_range(0..4))
        .map(|_| rng.random_range(0..nrows as u32 + 3).to_string())
        .collect();
    let c_sql = [sql_completion(&mut rng, header), sql_completion(&mut rng, header)];
    let r_sql = [sql_completion(&mut rng, header), sql_completion(&mut rng, header)];
    let c_text = list_completion(&mut rng, "columns", cols);
    let r_text = list_completion(&mut rng, "rows", ids);
    Script::default()
        .rule(Stage::ColSql, "", &[&c_sql[0], &c_sql[1]])
        .rule(Stage::ColText, "", &[&c_text])
        .rule(Stage::RowSql, "", &[&r_sql[0], &r_sql[1]])
        .rule(Stage::RowText, "", &[&r_text])
}

pub struct Extracted {
    pub mode: ExtractionMode,
    pub t_cr: Table,
    pub trace: ExtractionTrace,
}

/// The table for `seed` and its extraction under every mode.
pub fn case(seed: u64) -> (Table, Vec<Extracted>) {
    let raw = gen_table(&mut StdRng::seed_from_u64(seed));
    let t = Table::load(&raw).unwrap();
    let sc = script(seed ^ 0x5eed, t.columns(), t.num_rows());
    let gw = Gateway::new(Box::new(ScriptedBackend::new(sc)), 1);
    let templates = Templates::builtin();
    let profile = Profile::default_for(ModelFamily::Gpt35, TaskKind::ShortQa);
    let runs = MODES
        .into_iter()
        .map(|mode| {
            let mut s = Session::new(&gw, &templates, &profile, 3000);
            let (t_cr, trace) = extract(&mut s, &t, "which one?", mode).unwrap();
            Extracted { mode, t_cr, trace }
        })
        .collect();
    (t, runs)
}

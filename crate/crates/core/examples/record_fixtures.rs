//! Regenerates the committed replay fixtures by recording the scripted
//! completions under `fixtures/`.
//!
//! cargo run --example record_fixtures

use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;

use tabreason::config::{DatasetConfig, RunConfig, Upstream};
use tabreason::eval::{self, DatasetFormat};
use tabreason::llm::{BackendKind, Gateway, Recorder, Script, ScriptedBackend};
use tabreason::pipeline::{Pipeline, PipelineOptions};
use tabreason::profile::{ModelFamily, Profile, TaskKind};
use tabreason::prompt::Templates;
use tabreason::table::{RawTable, Table};

fn clear_json(dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for entry in std::fs::read_dir(dir)? {
        let p = entry?.path();
        if p.extension().is_some_and(|x| x == "json") {
            std::fs::remove_file(p)?;
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");

    let golden = root.join("golden");
    let replay = golden.join("replay");
    clear_json(&replay)?;
    let script = Script::load(golden.join("script.json"))?;
    let backend = Recorder::new(ScriptedBackend::new(script), &replay);
    let pipeline = Pipeline::new(
        Gateway::new(Box::new(backend), 1),
        Templates::builtin(),
        PipelineOptions::default(),
    );
    let raw: RawTable = serde_json::from_str(&std::fs::read_to_string(golden.join("table.json"))?)?;
    let question = std::fs::read_to_string(golden.join("question.txt"))?;
    let profile = Profile::default_for(ModelFamily::Gpt35, TaskKind::ShortQa);
    let out = pipeline.run(&Table::load(&raw)?, question.trim(), TaskKind::ShortQa, &profile)?;
    println!(
        "golden: {} exchanges, answer {:?}",
        out.exchanges.len(),
        out.reasoning.answer.prediction()
    );

    let suite = root.join("suite");
    let replay = suite.join("replay");
    clear_json(&replay)?;
    let scratch = tempfile::tempdir()?;
    let mut cfg = RunConfig {
        dataset: Some(DatasetConfig {
            path: suite.join("dataset.jsonl"),
            format: DatasetFormat::Neutral,
        }),
        output_dir: Some(scratch.path().to_path_buf()),
        ..RunConfig::default()
    };
    cfg.backend.kind = BackendKind::Record;
    cfg.backend.upstream = Upstream::Scripted;
    cfg.backend.script = Some(suite.join("script.json"));
    cfg.backend.fixtures_dir = Some(replay.clone());
    let summary = eval::run(&cfg, &AtomicBool::new(false))?;
    println!(
        "suite: {} examples, {} errors, {} fixtures",
        summary.report.examples,
        summary.report.errors,
        std::fs::read_dir(&replay)?.count()
    );
    Ok(())
}

//! Evaluates the bundled 20-example suite from replay fixtures and prints
//! the report.
//!
//! cargo run --example batch_eval [-- OUTPUT_DIR]

use std::path::PathBuf;
use std::sync::atomic::AtomicBool;

use tabreason::config::{DatasetConfig, RunConfig};
use tabreason::eval::{self, DatasetFormat};
use tabreason::llm::BackendKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let suite = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/suite");
    let scratch = tempfile::tempdir()?;
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| scratch.path().join("run"));

    let mut cfg = RunConfig {
        dataset: Some(DatasetConfig {
            path: suite.join("dataset.jsonl"),
            format: DatasetFormat::Neutral,
        }),
        output_dir: Some(out.clone()),
        concurrency: 4,
        ..RunConfig::default()
    };
    cfg.backend.kind = BackendKind::Replay;
    cfg.backend.fixtures_dir = Some(suite.join("replay"));

    let summary = eval::run(&cfg, &AtomicBool::new(false))?;
    print!("{}", summary.report.render_text());

    let again = eval::recompute_report(&out)?;
    assert_eq!(again, summary.report);
    println!("\nrecomputed from {} trace files: identical", again.examples);
    Ok(())
}

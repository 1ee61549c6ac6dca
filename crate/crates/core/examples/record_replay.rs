//! Records a scripted run into fresh fixtures, replays it, and checks the
//! traces match byte for byte.
//!
//! cargo run --example record_replay

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;

use tabreason::config::{DatasetConfig, RunConfig, Upstream};
use tabreason::eval::{self, DatasetFormat};
use tabreason::llm::BackendKind;

fn traces(dir: &Path) -> std::io::Result<BTreeMap<PathBuf, Vec<u8>>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir.join("traces"))? {
        let p = entry?.path();
        out.insert(PathBuf::from(p.file_name().unwrap()), std::fs::read(&p)?);
    }
    Ok(out)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let suite = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/suite");
    let tmp = tempfile::tempdir()?;
    let fixtures = tmp.path().join("fixtures");

    let mut cfg = RunConfig {
        dataset: Some(DatasetConfig {
            path: suite.join("dataset.jsonl"),
            format: DatasetFormat::Neutral,
        }),
        output_dir: Some(tmp.path().join("recorded")),
        ..RunConfig::default()
    };
    cfg.backend.kind = BackendKind::Record;
    cfg.backend.upstream = Upstream::Scripted;
    cfg.backend.script = Some(suite.join("script.json"));
    cfg.backend.fixtures_dir = Some(fixtures.clone());
    eval::run(&cfg, &AtomicBool::new(false))?;
    println!("recorded {} fixtures", std::fs::read_dir(&fixtures)?.count());

    cfg.backend.kind = BackendKind::Replay;
    cfg.output_dir = Some(tmp.path().join("replayed"));
    cfg.concurrency = 8;
    eval::run(&cfg, &AtomicBool::new(false))?;

    let a = traces(&tmp.path().join("recorded"))?;
    let b = traces(&tmp.path().join("replayed"))?;
    println!("{} traces, identical: {}", a.len(), a == b);
    let report = |d: &str| std::fs::read(tmp.path().join(d).join("report.json"));
    println!("report identical: {}", report("recorded")? == report("replayed")?);
    Ok(())
}

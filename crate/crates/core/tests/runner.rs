mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::AtomicBool;

use tabreason::config::{DatasetConfig, RunConfig};
use tabreason::eval::{self, DatasetFormat};
use tabreason::llm::BackendKind;

fn suite_config(out: &Path, concurrency: usize, seed: Option<u64>) -> RunConfig {
    let suite = common::fixtures().join("suite");
    let mut cfg = RunConfig {
        dataset: Some(DatasetConfig {
            path: suite.join("dataset.jsonl"),
            format: DatasetFormat::Neutral,
        }),
        output_dir: Some(out.to_path_buf()),
        concurrency,
        seed,
        ..RunConfig::default()
    };
    cfg.backend.kind = BackendKind::Replay;
    cfg.backend.fixtures_dir = Some(suite.join("replay"));
    cfg
}

fn traces(dir: &Path) -> BTreeMap<String, String> {
    std::fs::read_dir(dir.join("traces"))
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap())
        })
        .collect()
}

#[test]
fn outputs_do_not_depend_on_concurrency_or_dispatch_order() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let ra = eval::run(&suite_config(&a, 1, None), &AtomicBool::new(false)).unwrap();
    let rb = eval::run(&suite_config(&b, 6, Some(42)), &AtomicBool::new(false)).unwrap();
    assert!(!ra.interrupted && !rb.interrupted);
    assert_eq!(ra.report.errors, 0);
    assert_eq!(traces(&a), traces(&b));
    let read = |d: &Path| std::fs::read_to_string(d.join("report.json")).unwrap();
    assert_eq!(read(&a), read(&b));
    let timings = std::fs::read_to_string(b.join("timings.jsonl")).unwrap();
    assert_eq!(timings.lines().count(), 20);
}

#[test]
fn budgets_stay_within_the_profile_range() {
    let tmp = tempfile::tempdir().unwrap();
    let s = eval::run(&suite_config(tmp.path(), 4, None), &AtomicBool::new(false)).unwrap();
    assert!(s.report.budget_histogram.keys().all(|b| (6..=10).contains(b)));
    assert_eq!(s.report.budget_histogram.values().sum::<usize>(), 20);
    assert_eq!(s.report.classifier_calls, 20);
}

#[test]
fn preset_stop_flag_evaluates_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let s = eval::run(&suite_config(tmp.path(), 2, None), &AtomicBool::new(true)).unwrap();
    assert!(s.interrupted);
    assert_eq!(s.report.examples, 0);
    assert!(tmp.path().join("report.json").exists());
}

#[test]
fn echoed_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    eval::run(&suite_config(&first, 3, Some(7)), &AtomicBool::new(false)).unwrap();
    let mut again = RunConfig::load(&first.join("config.json")).unwrap();
    let second = tmp.path().join("second");
    again.output_dir = Some(second.clone());
    eval::run(&again, &AtomicBool::new(false)).unwrap();
    assert_eq!(traces(&first), traces(&second));
}

#[test]
fn bad_lines_are_rejected_not_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    let src = common::fixtures().join("suite/dataset.jsonl");
    let mut text = std::fs::read_to_string(src).unwrap();
    text.push_str("{\"id\": \"broken\"}\nnot json\n");
    let ds = tmp.path().join("ds.jsonl");
    std::fs::write(&ds, text).unwrap();
    let mut cfg = suite_config(&tmp.path().join("out"), 2, None);
    cfg.dataset.as_mut().unwrap().path = ds;
    let s = eval::run(&cfg, &AtomicBool::new(false)).unwrap();
    assert_eq!(s.rejects, 2);
    assert_eq!(s.report.examples, 20);
    let rejects = std::fs::read_to_string(tmp.path().join("out/rejects.jsonl")).unwrap();
    assert_eq!(rejects.lines().count(), 2);
}

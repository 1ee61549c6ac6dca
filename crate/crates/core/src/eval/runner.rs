//! Batch evaluation: a bounded worker pool over a dataset, writing one
//! trace per example plus run-level artifacts.
//!
//! Output directory layout:
//!
//! ```text
//! config.json      effective configuration, absolute paths
//! rejects.jsonl    dataset lines that failed validation
//! records.jsonl    one record per line, in completion order
//! timings.jsonl    wall-clock time per example
//! traces/NNNNN_<id>.json
//! report.json, report.txt
//! ```

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::Serialize;
use thiserror::Error;

use super::dataset::{load_dataset, DatasetError, ExampleRecord};
use super::record::EvalRecord;
use super::report::RunReport;
use crate::config::{ConfigError, RunConfig};
use crate::pipeline::Pipeline;
use crate::profile::{Profile, TaskKind};
use crate::table::Table;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot read traces in {path}: {message}")]
    Records { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub report: RunReport,
    pub rejects: usize,
    /// Stopped early; the report covers completed examples only.
    pub interrupted: bool,
}

#[derive(Serialize)]
struct Timing<'a> {
    index: usize,
    id: &'a str,
    wall_ms: u64,
}

/// `traces/00042_some-id.json`.
pub fn trace_file_name(index: usize, id: &str) -> String {
    let safe: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .take(64)
        .collect();
    format!("{index:05}_{safe}.json")
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn write_file(path: &Path, text: &str) -> Result<(), RunError> {
    fs::write(path, text).map_err(io_err(path))
}

/// Dispatch order; a seed shuffles it without changing any result.
pub fn dispatch_order(n: usize, seed: Option<u64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    if let Some(seed) = seed {
        order.shuffle(&mut StdRng::seed_from_u64(seed));
    }
    order
}

fn evaluate(
    pipeline: &Pipeline,
    cfg: &RunConfig,
    profiles: &[(TaskKind, Profile)],
    index: usize,
    ex: &ExampleRecord,
) -> EvalRecord {
    let modes = (cfg.extraction_mode, cfg.reasoning_mode);
    let table = match Table::load(&ex.table) {
        Ok(t) => t,
        Err(e) => return EvalRecord::failed(index, ex, modes, &cfg.thresholds, format!("bad table: {e}")),
    };
    let profile = &profiles
        .iter()
        .find(|(t, _)| *t == ex.task)
        .expect("profile for every task")
        .1;
    let result = pipeline.run(&table, &ex.question, ex.task, profile);
    EvalRecord::build(index, ex, Some(&table), modes, &cfg.thresholds, result)
}

/// Runs every example of the configured dataset. Individual failures end
/// up in their records; only configuration and IO problems are errors.
pub fn run(cfg: &RunConfig, stop: &AtomicBool) -> Result<RunSummary, RunError> {
    cfg.validate()?;
    let ds_cfg = cfg
        .dataset
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid("dataset.path is required".into()))?;
    let out = cfg
        .output_dir
        .clone()
        .ok_or_else(|| ConfigError::Invalid("output_dir is required".into()))?;
    let dataset = load_dataset(&ds_cfg.path, ds_cfg.format)?;
    let pipeline = Pipeline::new(cfg.build_gateway()?, cfg.templates()?, cfg.pipeline_options());
    let profiles: Vec<(TaskKind, Profile)> =
        TaskKind::ALL.into_iter().map(|t| (t, cfg.profile_for(t))).collect();

    let traces = out.join("traces");
    fs::create_dir_all(&traces).map_err(io_err(&traces))?;
    let mut effective = cfg.clone();
    let cwd = std::env::current_dir().map_err(io_err(Path::new(".")))?;
    effective.resolve_paths(&cwd);
    write_file(&out.join("config.json"), &pretty(&effective))?;
    let rejects: String = dataset
        .rejects
        .iter()
        .map(|r| serde_json::to_string(r).expect("serializable") + "\n")
        .collect();
    write_file(&out.join("rejects.jsonl"), &rejects)?;

    let records_path = out.join("records.jsonl");
    let timings_path = out.join("timings.jsonl");
    let mut records_out = BufWriter::new(File::create(&records_path).map_err(io_err(&records_path))?);
    let mut timings_out = BufWriter::new(File::create(&timings_path).map_err(io_err(&timings_path))?);

    let order = dispatch_order(dataset.examples.len(), cfg.seed);
    let cursor = AtomicUsize::new(0);
    let workers = cfg.concurrency.min(order.len()).max(1);
    let (tx, rx) = mpsc::channel::<(EvalRecord, u64)>();
    let mut records = Vec::with_capacity(order.len());

    std::thread::scope(|scope| -> Result<(), RunError> {
        for _ in 0..workers {
            let tx = tx.clone();
            let (order, cursor, pipeline, profiles, examples) =
                (&order, &cursor, &pipeline, &profiles, &dataset.examples);
            scope.spawn(move || loop {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let k = cursor.fetch_add(1, Ordering::SeqCst);
                let Some(&index) = order.get(k) else { break };
                let start = Instant::now();
                let rec = evaluate(pipeline, cfg, profiles, index, &examples[index]);
                let wall = start.elapsed().as_millis() as u64;
                if tx.send((rec, wall)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (rec, wall_ms) in rx {
            let trace = traces.join(trace_file_name(rec.index, &rec.id));
            write_file(&trace, &pretty(&rec))?;
            let line = serde_json::to_string(&rec).expect("serializable");
            writeln!(records_out, "{line}").map_err(io_err(&records_path))?;
            let t = Timing {
                index: rec.index,
                id: &rec.id,
                wall_ms,
            };
            writeln!(timings_out, "{}", serde_json::to_string(&t).expect("serializable"))
                .map_err(io_err(&timings_path))?;
            records.push(rec);
        }
        Ok(())
    })?;
    records_out.flush().map_err(io_err(&records_path))?;
    timings_out.flush().map_err(io_err(&timings_path))?;

    let report = RunReport::compute(&records);
    write_file(&out.join("report.json"), &report.to_json())?;
    write_file(&out.join("report.txt"), &report.render_text())?;
    Ok(RunSummary {
        output_dir: out,
        interrupted: records.len() < order.len(),
        report,
        rejects: dataset.rejects.len(),
    })
}

/// Reads every trace of a finished run. `dir` is either the run's output
/// directory or its `traces` subdirectory.
pub fn load_traces(dir: &Path) -> Result<Vec<EvalRecord>, RunError> {
    let sub = dir.join("traces");
    let dir = if sub.is_dir() { sub } else { dir.to_path_buf() };
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(io_err(&dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(RunError::Records {
            path: dir,
            message: "no trace files".into(),
        });
    }
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(io_err(p))?;
            serde_json::from_str(&text).map_err(|e| RunError::Records {
                path: p.clone(),
                message: e.to_string(),
            })
        })
        .collect()
}

/// Recomputes the report of a finished run from its trace files.
pub fn recompute_report(dir: &Path) -> Result<RunReport, RunError> {
    Ok(RunReport::compute(&load_traces(dir)?))
}

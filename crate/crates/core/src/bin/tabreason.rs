use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use tabreason::config::{ConfigError, RunConfig};
use tabreason::eval::{self, DatasetFormat, RunError};
use tabreason::extract::{ExtractionMode, ExtractionTrace};
use tabreason::llm::{BackendKind, LlmExchange};
use tabreason::pipeline::Pipeline;
use tabreason::profile::{ModelFamily, TaskKind};
use tabreason::reason::{ReasoningMode, ReasoningTrace};
use tabreason::table::{encode_pipe, RawTable, Table};

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "tabreason", version, about = "Question answering and fact checking over tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a dataset and write traces plus a report.
    Run(RunArgs),
    /// Answer one question about one table.
    Ask(AskArgs),
    /// Recompute and print the report of a finished run.
    Report(ReportArgs),
}

/// Flags shared by `run` and `ask`; each overrides the config file.
#[derive(Args)]
struct Overrides {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_backend)]
    backend: Option<BackendKind>,
    #[arg(long)]
    fixtures: Option<PathBuf>,
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long)]
    extraction_mode: Option<ExtractionMode>,
    #[arg(long, alias = "mode")]
    reasoning_mode: Option<ReasoningMode>,
    #[arg(long, value_parser = parse_family)]
    model_family: Option<ModelFamily>,
    #[arg(long)]
    templates: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Overrides,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    format: Option<DatasetFormat>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    concurrency: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AskArgs {
    #[command(flatten)]
    common: Overrides,
    /// JSON table: {"caption": ..., "header": [...], "rows": [[...], ...]}.
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    question: String,
    #[arg(long, default_value = "short_qa")]
    task: TaskKind,
    /// Print the intermediate selections, the extracted table and the evidence.
    #[arg(long, short)]
    verbose: bool,
    /// Write the full trace as JSON to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Run output directory or its traces directory.
    dir: PathBuf,
    /// Print JSON instead of the text table.
    #[arg(long)]
    json: bool,
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| format!("unknown backend {s:?} (live, record, replay, scripted)"))
}

fn parse_family(s: &str) -> Result<ModelFamily, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| format!("unknown model family {s:?}"))
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } | ConfigError::Json { .. } | ConfigError::Invalid(_) => {
                Failure::Config(e.to_string())
            }
            ConfigError::Gateway(_) => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Config(c) => c.into(),
            RunError::Dataset(_) => Failure::Config(e.to_string()),
            RunError::Io { .. } | RunError::Records { .. } => Failure::Runtime(e.to_string()),
        }
    }
}

fn load_config(o: &Overrides) -> Result<RunConfig, Failure> {
    let mut cfg = match &o.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(b) = o.backend {
        cfg.backend.kind = b;
    }
    if let Some(p) = &o.fixtures {
        cfg.backend.fixtures_dir = Some(p.clone());
    }
    if let Some(p) = &o.script {
        cfg.backend.script = Some(p.clone());
    }
    if let Some(m) = o.extraction_mode {
        cfg.extraction_mode = m;
    }
    if let Some(m) = o.reasoning_mode {
        cfg.reasoning_mode = m;
    }
    if let Some(f) = o.model_family {
        cfg.model_family = f;
    }
    if let Some(p) = &o.templates {
        cfg.templates_dir = Some(p.clone());
    }
    Ok(cfg)
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let mut cfg = load_config(&args.common)?;
    if let Some(p) = args.dataset {
        let format = cfg.dataset.as_ref().map(|d| d.format).unwrap_or_default();
        cfg.dataset = Some(tabreason::config::DatasetConfig { path: p, format });
    }
    if let (Some(f), Some(d)) = (args.format, cfg.dataset.as_mut()) {
        d.format = f;
    }
    if let Some(p) = args.output {
        cfg.output_dir = Some(p);
    }
    if let Some(n) = args.concurrency {
        cfg.concurrency = n;
    }
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    let stop = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&stop);
    let _ = ctrlc::set_handler(move || {
        eprintln!("stopping after in-flight examples finish");
        flag.store(true, Ordering::SeqCst);
    });
    let summary = eval::run(&cfg, &stop)?;
    print!("{}", summary.report.render_text());
    if summary.rejects > 0 {
        eprintln!("{} dataset lines rejected; see rejects.jsonl", summary.rejects);
    }
    if summary.interrupted {
        eprintln!("interrupted: report covers completed examples only");
    }
    eprintln!("output: {}", summary.output_dir.display());
    Ok(())
}

#[derive(Serialize)]
struct AskTrace<'a> {
    question: &'a str,
    task: TaskKind,
    prediction: &'a str,
    extraction: &'a ExtractionTrace,
    reasoning: &'a ReasoningTrace,
    exchanges: &'a [LlmExchange],
}

fn read_table(path: &Path) -> Result<Table, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read table {}: {e}", path.display())))?;
    let raw: RawTable = serde_json::from_str(&text)
        .map_err(|e| Failure::Config(format!("malformed table {}: {e}", path.display())))?;
    Table::load(&raw).map_err(|e| Failure::Config(format!("invalid table {}: {e}", path.display())))
}

fn cmd_ask(args: AskArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.common)?;
    cfg.validate()?;
    let table = read_table(&args.table)?;
    let pipeline = Pipeline::new(cfg.build_gateway()?, cfg.templates()?, cfg.pipeline_options());
    let out = pipeline
        .run(&table, &args.question, args.task, &cfg.profile_for(args.task))
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    let answer = &out.reasoning.answer;
    if args.verbose {
        let x = &out.extraction;
        println!("C1: {}", x.c1);
        println!("C2: {}", x.c2);
        println!("C': {}", x.c_final);
        println!("R1: {}", x.r1);
        println!("R2: {}", x.r2);
        println!("R': {}", x.r_final);
        println!("T_CR ({} cells):", x.cells.t_cr);
        println!("{}", encode_pipe(&out.t_cr));
        if let Some(m) = &out.reasoning.math {
            println!("math: {}", if m.is_math { "yes" } else { "no" });
        }
        match out.reasoning.evidence.as_ref() {
            Some(ev) => {
                println!("E_v ({}):", ev.outcome.as_str());
                if let Some(q) = &ev.query_text {
                    println!("{q}");
                }
                if let Some(r) = &ev.rendered {
                    print!("{r}");
                }
            }
            None => println!("E_v: none"),
        }
        print!("answer: ");
    }
    if answer.abstained {
        println!("(abstain)");
    } else {
        println!("{}", answer.prediction());
    }
    if let Some(path) = &args.trace {
        let trace = AskTrace {
            question: &args.question,
            task: args.task,
            prediction: answer.prediction(),
            extraction: &out.extraction,
            reasoning: &out.reasoning,
            exchanges: &out.exchanges,
        };
        let mut text = serde_json::to_string_pretty(&trace).expect("trace serializes");
        text.push('\n');
        std::fs::write(path, text)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?;
        eprintln!("trace: {}", path.display());
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), Failure> {
    let report = eval::recompute_report(&args.dir)?;
    if args.json {
        print!("{}", report.to_json());
    } else {
        print!("{}", report.render_text());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Ask(a) => cmd_ask(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

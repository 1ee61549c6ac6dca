//! Datasets, scoring, per-example records and batch runs.

pub mod dataset;
pub mod metrics;
pub mod record;
pub mod report;
pub mod runner;

pub use dataset::{load_dataset, parse_dataset, Dataset, DatasetFormat, ExampleRecord};
pub use metrics::{SizeBucket, Thresholds};
pub use record::{EvalRecord, RecordStatus, Scores};
pub use report::RunReport;
pub use runner::{load_traces, recompute_report, run, RunError, RunSummary};

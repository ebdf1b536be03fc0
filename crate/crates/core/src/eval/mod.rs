//! Within-dataset LOSO, cross-dataset and combined-dataset protocols, metrics and reports.

mod metrics;
mod protocol;
mod report;

pub use metrics::{metrics, Confusion, Metrics, Summary};
pub use protocol::{
    combine_and_loso, combine_tables, cross_dataset, loso, loso_fold, model_ref, ConfigEcho, EvalConfig,
    EvaluationReport, FoldModel, FoldOutcome, FoldResult, LosoOutput, PooledResult, Protocol, SkippedFold,
    REPORT_VERSION,
};
pub use report::{load_report, render_csv, render_text, write_report};

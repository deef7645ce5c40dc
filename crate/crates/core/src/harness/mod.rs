//! Experiment driver: scenario loading, the two-timescale run loop,
//! parameter sweeps and report emission.

mod experiment;
mod report;
mod scenario;
mod sweep;

pub use experiment::{run_experiment, AlgorithmKind, RunOptions};
pub use report::{
    emit_report, format_sig9, summarize, AlgorithmSummary, ExperimentReport, ReportFormat,
    SlotRecord,
};
pub use scenario::{ScenarioSpec, SweepParameter, SCHEMA_VERSION};
pub use sweep::{run_sweep, sweep_summary_csv, SweepOutcome, SweepSpec, SweepSummaryRow};

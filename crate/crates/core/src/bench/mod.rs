//! Two-stage benchmark harness: a stairs batch-size sweep, then a
//! comparison of the three decoding methods at one batch size.
//!
//! Runs are timed either with a monotonic clock ([`Mode::Wallclock`]) or by
//! charging each generation trace against a [`LatencyModel`]
//! ([`Mode::Simulated`]). Simulated reports are byte-for-byte reproducible.

mod latency;
mod plan;
mod report;
mod runner;

pub use latency::{simulate_time, LatencyModel};
pub use plan::{ExperimentPlan, Mode, ModelSet, ModelSpec, Prompt};
pub use report::{
    seeded_timestamp, write_report, BenchReport, GroupSummary, OutputRecord, ReportFormat,
    ReportKind, ReportMetadata, RunRecord, SpeedupRow, CSV_HEADER,
};
pub use runner::{best_stairs_batch, run_comparison, run_sweep};

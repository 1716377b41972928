use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::plan::{ExperimentPlan, Mode};
use crate::decode::{GenerationTrace, Method, TraceTotals};
use crate::error::{Error, Result};
use crate::lm::TokenSeq;
use crate::metrics::TimingStats;

pub const CSV_HEADER: [&str; 11] = [
    "method",
    "batch_size",
    "prompt_id",
    "rep",
    "seconds",
    "target_batch_calls",
    "target_single_calls",
    "target_rows_scored",
    "draft_calls",
    "tokens_generated",
    "accepted_total",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportKind {
    Sweep,
    Comparison,
}

impl ReportKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReportKind::Sweep => "sweep",
            ReportKind::Comparison => "comparison",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    Md,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::Md => "md",
        }
    }
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "md" | "markdown" => Ok(ReportFormat::Md),
            other => Err(Error::InvalidConfig(format!(
                "unknown report format {other:?} (expected csv, json or md)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub batch_size: usize,
    pub prompt_id: usize,
    pub rep: usize,
    pub seconds: f64,
    pub totals: TraceTotals,
    pub iterations: usize,
    pub accepted_total: usize,
}

impl RunRecord {
    pub(crate) fn new(
        method: Method,
        batch_size: usize,
        prompt_id: usize,
        rep: usize,
        seconds: f64,
        trace: &GenerationTrace,
    ) -> Self {
        RunRecord {
            method,
            batch_size,
            prompt_id,
            rep,
            seconds,
            totals: trace.totals,
            iterations: trace.iterations.len(),
            accepted_total: trace.accepted_total(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub method: Method,
    pub batch_size: usize,
    /// Statistics over repetitions; one repetition runs every prompt once.
    pub stats: TimingStats,
    pub mean_accepted_per_iteration: f64,
    pub tokens_per_iteration: f64,
    /// Lowest BLEU over prompts against the target's standalone output.
    pub bleu_vs_original_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub method: Method,
    pub batch_size: usize,
    pub baseline_mean: f64,
    pub variant_mean: f64,
    pub speedup_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub method: Method,
    pub batch_size: usize,
    pub prompt_id: usize,
    pub tokens: Vec<u32>,
    pub bleu_vs_original: f64,
}

impl OutputRecord {
    pub(crate) fn new(
        method: Method,
        batch_size: usize,
        prompt_id: usize,
        out: &TokenSeq,
        bleu: f64,
    ) -> Self {
        OutputRecord {
            method,
            batch_size,
            prompt_id,
            tokens: out.raw_ids(),
            bleu_vs_original: bleu,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub plan: ExperimentPlan,
    pub environment: String,
    pub timestamp: String,
    pub clock: String,
    pub generator: String,
}

impl ReportMetadata {
    pub(crate) fn for_plan(plan: &ExperimentPlan) -> Self {
        let (timestamp, clock) = match plan.mode {
            Mode::Simulated => (
                seeded_timestamp(plan.seed),
                "simulated: latency model applied to generation traces".to_string(),
            ),
            Mode::Wallclock => (
                Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
                "std::time::Instant (monotonic, nanosecond resolution)".to_string(),
            ),
        };
        ReportMetadata {
            plan: plan.clone(),
            environment: format!("{}-{}", std::env::consts::OS, std::env::consts::ARCH),
            timestamp,
            clock,
            generator: concat!("stairs-core ", env!("CARGO_PKG_VERSION")).to_string(),
        }
    }
}

/// Deterministic stand-in timestamp: the epoch plus `seed` seconds, wrapped
/// to stay within the representable range.
pub fn seeded_timestamp(seed: u64) -> String {
    let secs = (seed % 4_000_000_000) as i64;
    DateTime::<Utc>::from_timestamp(secs, 0)
        .expect("wrapped seed is a valid timestamp")
        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub kind: ReportKind,
    pub metadata: ReportMetadata,
    pub runs: Vec<RunRecord>,
    pub groups: Vec<GroupSummary>,
    pub speedups: Vec<SpeedupRow>,
    /// Sweep winner: the stairs batch size with the lowest mean time.
    pub best_batch_size: Option<usize>,
    pub outputs: Vec<OutputRecord>,
}

impl BenchReport {
    pub fn group(&self, method: Method, batch_size: usize) -> Option<&GroupSummary> {
        self.groups
            .iter()
            .find(|g| g.method == method && g.batch_size == batch_size)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::InvalidInput(format!("csv encoding failed: {e}"));
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        for r in &self.runs {
            let t = &r.totals;
            w.write_record([
                r.method.as_str().to_string(),
                r.batch_size.to_string(),
                r.prompt_id.to_string(),
                r.rep.to_string(),
                r.seconds.to_string(),
                t.target_batch_calls.to_string(),
                t.target_single_calls.to_string(),
                t.target_rows_scored.to_string(),
                t.draft_calls.to_string(),
                t.tokens_generated.to_string(),
                r.accepted_total.to_string(),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidInput(format!("csv encoding failed: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut md = String::new();
        let m = &self.metadata;
        let _ = writeln!(md, "# {} report\n", self.kind.as_str());
        let _ = writeln!(md, "- mode: {:?}", m.plan.mode);
        let _ = writeln!(md, "- timestamp: {}", m.timestamp);
        let _ = writeln!(md, "- clock: {}", m.clock);
        let _ = writeln!(md, "- environment: {}", m.environment);
        let _ = writeln!(
            md,
            "- repetitions: {} (warmup {}), prompts: {}, max_new_tokens: {}\n",
            m.plan.repetitions,
            m.plan.warmup_runs,
            m.plan.prompts.len(),
            m.plan.max_new_tokens
        );

        md.push_str("## Timing\n\n");
        md.push_str("| method | B | n | mean (s) | median | std | min | p5 | p95 | max | tokens/iter | BLEU min |\n");
        md.push_str("|---|---|---|---|---|---|---|---|---|---|---|---|\n");
        for g in &self.groups {
            let s = &g.stats;
            let _ = writeln!(
                md,
                "| {} | {} | {} | {:.6} | {:.6} | {:.6} | {:.6} | {:.6} | {:.6} | {:.6} | {:.3} | {:.2} |",
                g.method, g.batch_size, s.n, s.mean, s.median, s.std, s.min, s.p5, s.p95, s.max,
                g.tokens_per_iteration, g.bleu_vs_original_min
            );
        }

        if !self.speedups.is_empty() {
            md.push_str("\n## Speedup vs original\n\n");
            md.push_str("| method | B | original mean (s) | method mean (s) | speedup % |\n");
            md.push_str("|---|---|---|---|---|\n");
            for s in &self.speedups {
                let _ = writeln!(
                    md,
                    "| {} | {} | {:.6} | {:.6} | {:.2} |",
                    s.method, s.batch_size, s.baseline_mean, s.variant_mean, s.speedup_percent
                );
            }
        }
        if let Some(b) = self.best_batch_size {
            let _ = writeln!(md, "\n## Sweep\n\nbest batch size: {b}");
        }
        md
    }
}

/// Writes the report in each requested format to `out_dir`, creating it if
/// needed. Files are named `<kind>.<ext>`.
pub fn write_report(
    report: &BenchReport,
    formats: &[ReportFormat],
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::with_capacity(formats.len());
    for &f in formats {
        let path = out_dir.join(format!("{}.{}", report.kind.as_str(), f.extension()));
        let body = match f {
            ReportFormat::Csv => report.to_csv()?,
            ReportFormat::Json => report.to_json(),
            ReportFormat::Md => report.to_markdown(),
        };
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

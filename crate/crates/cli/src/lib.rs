//! Command-line front end: `generate`, `sweep`, `compare` and `bleu`.
//!
//! Exit codes: 0 on success, 1 on runtime or I/O failure, 2 on a
//! configuration or usage error.

pub mod config;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use stairs_core::bench::{
    run_comparison, run_sweep, write_report, BenchReport, ExperimentPlan, Mode, Prompt,
    ReportFormat,
};
use stairs_core::metrics::{bleu_with_order, MAX_ORDER};
use stairs_core::{Error, GenConfig, Method};

pub use config::{Config, DEFAULT_CONFIG};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Runtime(format!("cannot write output: {e}"))
}

#[derive(Debug, Parser)]
#[command(
    name = "stairs",
    version,
    about = "Stairs assisted greedy decoding and benchmark harness"
)]
pub struct Cli {
    /// Experiment config (TOML). Defaults to the built-in config.
    #[arg(long, global = true, env = "STAIRS_CONFIG")]
    pub config: Option<PathBuf>,
    /// Override the plan seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Report directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Report formats, comma separated: csv, json, md.
    #[arg(long, global = true, value_delimiter = ',')]
    pub format: Option<Vec<String>>,
    /// Timing mode: simulated or wallclock.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decode one prompt and print the continuation.
    Generate(GenerateArgs),
    /// Time stairs decoding over the configured batch sizes.
    Sweep(SweepArgs),
    /// Compare original, sequential assisted and stairs decoding.
    Compare(CompareArgs),
    /// Sentence BLEU of a whitespace-tokenized candidate file against a reference file.
    Bleu(BleuArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value = "stairs")]
    pub method: String,
    /// Stairs batch size; defaults to the configured comparison batch size, or 7.
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Prompt text, tokenized against the target vocabulary.
    #[arg(long, conflicts_with = "prompt_ids")]
    pub prompt: Option<String>,
    /// Prompt as comma-separated token ids.
    #[arg(long, value_delimiter = ',')]
    pub prompt_ids: Option<Vec<u32>>,
    #[arg(long)]
    pub max_new_tokens: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated batch sizes, overriding the config.
    #[arg(long, value_delimiter = ',')]
    pub batch_sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub repetitions: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Comma-separated methods, overriding the config.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    /// Fixed batch size; without one a sweep picks it first.
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub repetitions: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BleuArgs {
    pub candidate: PathBuf,
    pub reference: PathBuf,
}

struct Output {
    dir: PathBuf,
    formats: Vec<ReportFormat>,
}

fn load_config(cli: &Cli) -> Result<(Config, Output), CliError> {
    let mut cfg = Config::load_or_default(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.plan.seed = seed;
    }
    if let Some(mode) = &cli.mode {
        cfg.plan.mode = mode.parse::<Mode>()?;
    }
    let formats = match &cli.format {
        Some(list) => list
            .iter()
            .map(|f| f.parse::<ReportFormat>())
            .collect::<Result<Vec<_>, _>>()?,
        None => cfg.output.formats.clone(),
    };
    if formats.is_empty() {
        return Err(CliError::Config("no report formats selected".into()));
    }
    let dir = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    Ok((cfg, Output { dir, formats }))
}

/// Runs a parsed command line, writing human-readable output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Bleu(a) => bleu_cmd(a, out),
        Command::Generate(a) => {
            let (cfg, _) = load_config(cli)?;
            generate_cmd(&cfg, a, cli.verbose, out)
        }
        Command::Sweep(a) => {
            let (mut cfg, o) = load_config(cli)?;
            if let Some(b) = &a.batch_sizes {
                cfg.sweep.batch_sizes = b.clone();
            }
            if let Some(r) = a.repetitions {
                cfg.sweep.repetitions = r;
            }
            let report = sweep_stage(&cfg, &o, out)?;
            print_sweep(&report, out)
        }
        Command::Compare(a) => {
            let (mut cfg, o) = load_config(cli)?;
            if let Some(m) = &a.methods {
                cfg.compare.methods = m.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
            }
            if let Some(r) = a.repetitions {
                cfg.compare.repetitions = r;
            }
            if a.batch_size.is_some() {
                cfg.compare.batch_size = a.batch_size;
            }
            compare_cmd(&cfg, &o, out)
        }
    }
}

fn read_tokens(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    Ok(text.split_whitespace().map(str::to_string).collect())
}

fn bleu_cmd(a: &BleuArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cand = read_tokens(&a.candidate)?;
    let reference = read_tokens(&a.reference)?;
    if reference.is_empty() {
        return Err(CliError::Config(format!(
            "reference {} contains no tokens",
            a.reference.display()
        )));
    }
    // Same rule as the reports: orders beyond the reference length are dropped.
    let score = bleu_with_order(&cand, &reference, MAX_ORDER.min(reference.len()))?;
    writeln!(out, "{:.2}", score.value).map_err(io_err)
}

fn generate_cmd(
    cfg: &Config,
    a: &GenerateArgs,
    verbose: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let method: Method = a.method.parse()?;
    let batch = a.batch_size.or(cfg.compare.batch_size).unwrap_or(7);
    let mut plan = cfg.compare_plan(batch);
    plan.methods = vec![method];
    if let Some(n) = a.max_new_tokens {
        plan.max_new_tokens = n;
    }
    if let Some(ids) = &a.prompt_ids {
        plan.prompts = vec![Prompt::Ids(ids.clone())];
    } else if let Some(text) = &a.prompt {
        plan.prompts = vec![Prompt::Text(text.clone())];
    } else {
        plan.prompts.truncate(1);
    }
    plan.validate()?;
    let models = plan.build_models()?;
    let prompt = &models.prompts[0];
    let gen = GenConfig::new(plan.max_new_tokens, batch, plan.stop_on_eos);
    let (seq, trace) = method.run(&*models.target, &*models.draft, prompt, &gen)?;

    let vocab = models.target.vocabulary();
    let continuation = vocab.decode(&seq[prompt.len()..]).join(" ");
    writeln!(out, "{continuation}").map_err(io_err)?;
    if verbose {
        writeln!(
            out,
            "method: {method}, batch size: {batch}, target: {}",
            models.target.name()
        )
        .map_err(io_err)?;
        writeln!(
            out,
            "{:>5} {:>8} {:>8} {:>9} {:>6} {:>7}",
            "iter", "proposed", "accepted", "committed", "rows", "batched"
        )
        .map_err(io_err)?;
        for (i, it) in trace.iterations.iter().enumerate() {
            writeln!(
                out,
                "{:>5} {:>8} {:>8} {:>9} {:>6} {:>7}",
                i, it.draft_proposed, it.accepted, it.committed, it.target_rows, it.batched
            )
            .map_err(io_err)?;
        }
        let t = &trace.totals;
        writeln!(
            out,
            "totals: tokens={} target_batch_calls={} target_single_calls={} target_rows_scored={} draft_calls={}",
            t.tokens_generated, t.target_batch_calls, t.target_single_calls, t.target_rows_scored, t.draft_calls
        )
        .map_err(io_err)?;
    }
    Ok(())
}

fn write_and_list(report: &BenchReport, o: &Output, out: &mut dyn Write) -> Result<(), CliError> {
    for p in write_report(report, &o.formats, &o.dir)? {
        writeln!(out, "wrote {}", p.display()).map_err(io_err)?;
    }
    Ok(())
}

fn sweep_stage(cfg: &Config, o: &Output, out: &mut dyn Write) -> Result<BenchReport, CliError> {
    let plan: ExperimentPlan = cfg.sweep_plan();
    plan.validate()?;
    let report = run_sweep(&plan)?;
    write_and_list(&report, o, out)?;
    Ok(report)
}

fn print_sweep(report: &BenchReport, out: &mut dyn Write) -> Result<(), CliError> {
    writeln!(out, "{:>4} {:>12} {:>11}", "B", "mean (s)", "tokens/iter").map_err(io_err)?;
    for g in &report.groups {
        writeln!(
            out,
            "{:>4} {:>12.6} {:>11.3}",
            g.batch_size, g.stats.mean, g.tokens_per_iteration
        )
        .map_err(io_err)?;
    }
    if let Some(b) = report.best_batch_size {
        writeln!(out, "best batch size: {b}").map_err(io_err)?;
    }
    Ok(())
}

fn compare_cmd(cfg: &Config, o: &Output, out: &mut dyn Write) -> Result<(), CliError> {
    let mut methods = cfg.compare.methods.clone();
    methods.sort();
    methods.dedup();
    if methods.len() < 2 {
        return Err(CliError::Config(
            "a comparison needs at least two distinct methods".into(),
        ));
    }
    let batch = match cfg.compare.batch_size {
        Some(b) => b,
        None => {
            let sweep = sweep_stage(cfg, o, out)?;
            print_sweep(&sweep, out)?;
            sweep
                .best_batch_size
                .ok_or_else(|| CliError::Runtime("sweep produced no stairs timings".into()))?
        }
    };
    let plan = cfg.compare_plan(batch);
    plan.validate()?;
    let report = run_comparison(&plan)?;
    write_and_list(&report, o, out)?;

    writeln!(
        out,
        "{:<20} {:>4} {:>12} {:>9}",
        "method", "B", "mean (s)", "BLEU min"
    )
    .map_err(io_err)?;
    for g in &report.groups {
        writeln!(
            out,
            "{:<20} {:>4} {:>12.6} {:>9.2}",
            g.method.as_str(),
            g.batch_size,
            g.stats.mean,
            g.bleu_vs_original_min
        )
        .map_err(io_err)?;
    }
    for s in &report.speedups {
        writeln!(
            out,
            "speedup {} (B={}): {:.2}%",
            s.method, s.batch_size, s.speedup_percent
        )
        .map_err(io_err)?;
    }
    Ok(())
}

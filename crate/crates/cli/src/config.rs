//! Experiment configuration files.
//!
//! A config is a TOML document with `[plan]`, `[sweep]`, `[compare]`,
//! `[latency]`, `[target]`, `[draft]` and optional `[output]` sections. See
//! `configs/default.toml` for the annotated default, which is compiled into
//! the binary and used when no file is given.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use stairs_core::bench::{ExperimentPlan, LatencyModel, Mode, ModelSpec, Prompt, ReportFormat};
use stairs_core::Method;

use crate::CliError;

pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    pub mode: Mode,
    pub seed: u64,
    pub max_new_tokens: usize,
    #[serde(default = "yes")]
    pub stop_on_eos: bool,
    #[serde(default)]
    pub warmup_runs: usize,
    pub prompts: Vec<Prompt>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub batch_sizes: Vec<usize>,
    pub repetitions: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    pub methods: Vec<Method>,
    pub repetitions: usize,
    /// Unset means "use the sweep winner".
    #[serde(default)]
    pub batch_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<ReportFormat>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("reports")
}

fn default_formats() -> Vec<ReportFormat> {
    vec![ReportFormat::Csv, ReportFormat::Json, ReportFormat::Md]
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_out_dir(),
            formats: default_formats(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub plan: PlanSection,
    pub sweep: SweepSection,
    pub compare: CompareSection,
    pub latency: LatencyModel,
    pub target: ModelSpec,
    pub draft: ModelSpec,
    #[serde(default)]
    pub output: OutputSection,
}

impl Config {
    /// Parses a config. Relative corpus paths are resolved against
    /// `base_dir`, and must exist.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self, CliError> {
        let mut cfg: Config =
            toml::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        for spec in [&mut cfg.target, &mut cfg.draft] {
            if let ModelSpec::Ngram { corpus, .. } = spec {
                if corpus.is_relative() {
                    if let Some(base) = base_dir {
                        *corpus = base.join(&*corpus);
                    }
                }
                if !corpus.is_file() {
                    return Err(CliError::Config(format!(
                        "corpus file {} does not exist",
                        corpus.display()
                    )));
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Config::parse(&text, path.parent())
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            Some(p) => Config::load(p),
            None => Config::parse(DEFAULT_CONFIG, None),
        }
    }

    fn plan(
        &self,
        methods: Vec<Method>,
        batch_sizes: Vec<usize>,
        repetitions: usize,
    ) -> ExperimentPlan {
        ExperimentPlan {
            mode: self.plan.mode,
            methods,
            batch_sizes,
            repetitions,
            warmup_runs: self.plan.warmup_runs,
            prompts: self.plan.prompts.clone(),
            target: self.target.clone(),
            draft: self.draft.clone(),
            latency: self.latency,
            max_new_tokens: self.plan.max_new_tokens,
            stop_on_eos: self.plan.stop_on_eos,
            seed: self.plan.seed,
        }
    }

    pub fn sweep_plan(&self) -> ExperimentPlan {
        self.plan(
            vec![Method::Stairs],
            self.sweep.batch_sizes.clone(),
            self.sweep.repetitions,
        )
    }

    pub fn compare_plan(&self, batch_size: usize) -> ExperimentPlan {
        self.plan(
            self.compare.methods.clone(),
            vec![batch_size],
            self.compare.repetitions,
        )
    }
}

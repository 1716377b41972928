use std::time::Instant;

use rayon::prelude::*;

use super::latency::simulate_time;
use super::plan::{ExperimentPlan, Mode, ModelSet};
use super::report::{
    BenchReport, GroupSummary, OutputRecord, ReportKind, ReportMetadata, RunRecord, SpeedupRow,
};
use crate::decode::{greedy_generate, GenConfig, GenerationTrace, Method};
use crate::error::{Error, Result};
use crate::lm::{LanguageModel, TokenSeq};
use crate::metrics::{bleu_with_order, speedup_percent, timing_stats, MAX_ORDER};

struct CellResult {
    method: Method,
    batch_size: usize,
    runs: Vec<RunRecord>,
    outputs: Vec<OutputRecord>,
}

fn cell_error(method: Method, batch_size: usize, prompt: usize, e: Error) -> Error {
    Error::Cell {
        cell: format!("method={method} batch_size={batch_size} prompt={prompt}"),
        source: Box::new(e),
    }
}

/// BLEU over token strings. Orders longer than the reference are dropped so
/// that short identical outputs still score 100.
fn output_bleu(
    target: &dyn LanguageModel,
    candidate: &TokenSeq,
    reference: &TokenSeq,
) -> Result<f64> {
    let v = target.vocabulary();
    let c = v.decode(candidate);
    let r = v.decode(reference);
    let order = MAX_ORDER.min(r.len()).max(1);
    Ok(bleu_with_order(&c, &r, order)?.value)
}

fn run_once(
    models: &ModelSet,
    method: Method,
    prompt: &TokenSeq,
    cfg: &GenConfig,
) -> Result<(TokenSeq, GenerationTrace, f64)> {
    let start = Instant::now();
    let (out, trace) = method.run(&*models.target, &*models.draft, prompt, cfg)?;
    let elapsed = start.elapsed().as_secs_f64();
    if !trace.is_consistent() || trace.committed_total() != out.len() - prompt.len() {
        return Err(Error::ContractViolation(format!(
            "inconsistent generation trace for {method}"
        )));
    }
    Ok((out, trace, elapsed))
}

fn run_cell(
    plan: &ExperimentPlan,
    models: &ModelSet,
    references: &[TokenSeq],
    method: Method,
    batch_size: usize,
) -> Result<CellResult> {
    let cfg = GenConfig::new(plan.max_new_tokens, batch_size, plan.stop_on_eos);
    let mut runs = Vec::new();
    let mut outputs = Vec::new();
    let wrap = |p: usize| move |e| cell_error(method, batch_size, p, e);

    match plan.mode {
        Mode::Wallclock => {
            for _ in 0..plan.warmup_runs {
                for (p, prompt) in models.prompts.iter().enumerate() {
                    run_once(models, method, prompt, &cfg).map_err(wrap(p))?;
                }
            }
            for rep in 0..plan.repetitions {
                for (p, prompt) in models.prompts.iter().enumerate() {
                    let (out, trace, secs) =
                        run_once(models, method, prompt, &cfg).map_err(wrap(p))?;
                    runs.push(RunRecord::new(method, batch_size, p, rep, secs, &trace));
                    if rep == 0 {
                        let bleu =
                            output_bleu(&*models.target, &out, &references[p]).map_err(wrap(p))?;
                        outputs.push(OutputRecord::new(method, batch_size, p, &out, bleu));
                    }
                }
            }
        }
        Mode::Simulated => {
            // Simulated time is a pure function of the trace, so one decode per
            // prompt stands in for every repetition.
            let mut per_prompt = Vec::with_capacity(models.prompts.len());
            for (p, prompt) in models.prompts.iter().enumerate() {
                let (out, trace, _) = run_once(models, method, prompt, &cfg).map_err(wrap(p))?;
                let secs = simulate_time(&trace, &plan.latency).map_err(wrap(p))?;
                let bleu = output_bleu(&*models.target, &out, &references[p]).map_err(wrap(p))?;
                outputs.push(OutputRecord::new(method, batch_size, p, &out, bleu));
                per_prompt.push((trace, secs));
            }
            for rep in 0..plan.repetitions {
                for (p, (trace, secs)) in per_prompt.iter().enumerate() {
                    runs.push(RunRecord::new(method, batch_size, p, rep, *secs, trace));
                }
            }
        }
    }
    Ok(CellResult {
        method,
        batch_size,
        runs,
        outputs,
    })
}

fn summarize(plan: &ExperimentPlan, cell: &CellResult) -> Result<GroupSummary> {
    // One repetition covers every prompt once; its time is the sum.
    let mut per_rep = vec![0.0; plan.repetitions];
    for r in &cell.runs {
        per_rep[r.rep] += r.seconds;
    }
    let stats = timing_stats(&per_rep)?;
    let iterations: usize = cell.runs.iter().map(|r| r.iterations).sum();
    let accepted: usize = cell.runs.iter().map(|r| r.accepted_total).sum();
    let tokens: usize = cell.runs.iter().map(|r| r.totals.tokens_generated).sum();
    let bleu_min = cell
        .outputs
        .iter()
        .map(|o| o.bleu_vs_original)
        .fold(f64::INFINITY, f64::min);
    Ok(GroupSummary {
        method: cell.method,
        batch_size: cell.batch_size,
        stats,
        mean_accepted_per_iteration: accepted as f64 / iterations.max(1) as f64,
        tokens_per_iteration: tokens as f64 / iterations.max(1) as f64,
        bleu_vs_original_min: bleu_min,
    })
}

fn execute(
    plan: &ExperimentPlan,
    kind: ReportKind,
    cells: Vec<(Method, usize)>,
) -> Result<BenchReport> {
    plan.validate()?;
    let models = plan.build_models()?;
    let reference_cfg = GenConfig::new(plan.max_new_tokens, 1, plan.stop_on_eos);
    let references = models
        .prompts
        .iter()
        .enumerate()
        .map(|(p, prompt)| {
            greedy_generate(&*models.target, prompt, &reference_cfg)
                .map(|(out, _)| out)
                .map_err(|e| cell_error(Method::Original, 1, p, e))
        })
        .collect::<Result<Vec<_>>>()?;

    let results: Vec<CellResult> = match plan.mode {
        // Timed runs stay on this thread, one after another.
        Mode::Wallclock => cells
            .iter()
            .map(|&(m, b)| run_cell(plan, &models, &references, m, b))
            .collect::<Result<_>>()?,
        Mode::Simulated => cells
            .par_iter()
            .map(|&(m, b)| run_cell(plan, &models, &references, m, b))
            .collect::<Result<_>>()?,
    };

    let groups = results
        .iter()
        .map(|c| summarize(plan, c))
        .collect::<Result<Vec<_>>>()?;

    let speedups = match groups.iter().find(|g| g.method == Method::Original) {
        Some(base) => groups
            .iter()
            .filter(|g| g.method != Method::Original)
            .map(|g| {
                Ok(SpeedupRow {
                    method: g.method,
                    batch_size: g.batch_size,
                    baseline_mean: base.stats.mean,
                    variant_mean: g.stats.mean,
                    speedup_percent: speedup_percent(base.stats.mean, g.stats.mean)?,
                })
            })
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };

    let best_batch_size = match kind {
        ReportKind::Sweep => best_stairs_batch(&groups),
        ReportKind::Comparison => None,
    };

    let mut runs = Vec::new();
    let mut outputs = Vec::new();
    for c in results {
        runs.extend(c.runs);
        outputs.extend(c.outputs);
    }
    Ok(BenchReport {
        kind,
        metadata: ReportMetadata::for_plan(plan),
        runs,
        groups,
        speedups,
        best_batch_size,
        outputs,
    })
}

/// Batch size with the lowest mean time among stairs groups; ties go to the
/// smaller batch.
pub fn best_stairs_batch(groups: &[GroupSummary]) -> Option<usize> {
    groups
        .iter()
        .filter(|g| g.method == Method::Stairs)
        .min_by(|a, b| {
            a.stats
                .mean
                .total_cmp(&b.stats.mean)
                .then(a.batch_size.cmp(&b.batch_size))
        })
        .map(|g| g.batch_size)
}

/// Stage one: time stairs generation at every batch size in the plan.
pub fn run_sweep(plan: &ExperimentPlan) -> Result<BenchReport> {
    if plan.methods != [Method::Stairs] {
        return Err(Error::InvalidConfig(
            "a batch-size sweep runs the stairs method only".into(),
        ));
    }
    if plan.batch_sizes.len() < 2 {
        return Err(Error::InvalidConfig(
            "a batch-size sweep needs at least two batch sizes".into(),
        ));
    }
    let cells = plan
        .batch_sizes
        .iter()
        .map(|&b| (Method::Stairs, b))
        .collect();
    execute(plan, ReportKind::Sweep, cells)
}

/// Stage two: time each method in the plan at one fixed batch size.
/// `original` is always recorded with batch size 1.
pub fn run_comparison(plan: &ExperimentPlan) -> Result<BenchReport> {
    let [batch] = plan.batch_sizes[..] else {
        return Err(Error::InvalidConfig(format!(
            "a comparison uses exactly one batch size, got {:?}",
            plan.batch_sizes
        )));
    };
    let mut methods = plan.methods.clone();
    methods.sort();
    methods.dedup();
    let cells = methods
        .into_iter()
        .map(|m| (m, if m == Method::Original { 1 } else { batch }))
        .collect();
    execute(plan, ReportKind::Comparison, cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::plan::{ModelSpec, Prompt};
    use crate::bench::LatencyModel;

    fn plan(agreement: f64, lat: LatencyModel) -> ExperimentPlan {
        ExperimentPlan {
            mode: Mode::Simulated,
            methods: vec![Method::Stairs],
            batch_sizes: (2..=10).collect(),
            repetitions: 3,
            warmup_runs: 1,
            prompts: (0..4).map(|i| Prompt::Ids(vec![i, i + 1])).collect(),
            target: ModelSpec::Hash {
                vocab_size: 64,
                context_window: 4,
                eos_bias: 0.0,
                seed: None,
            },
            draft: ModelSpec::AgreementDraft {
                agreement,
                seed: None,
            },
            latency: lat,
            max_new_tokens: 60,
            stop_on_eos: true,
            seed: 11,
        }
    }

    fn means(r: &BenchReport) -> Vec<f64> {
        r.groups.iter().map(|g| g.stats.mean).collect()
    }

    #[test]
    fn perfect_free_draft_decreases_with_batch() {
        let r = run_sweep(&plan(1.0, LatencyModel::new(0.05, 0.0, 0.0).unwrap())).unwrap();
        let m = means(&r);
        assert!(m.windows(2).all(|w| w[1] < w[0]), "{m:?}");
        assert_eq!(r.best_batch_size, Some(10));
    }

    #[test]
    fn useless_draft_increases_with_batch() {
        let r = run_sweep(&plan(0.0, LatencyModel::new(0.05, 0.001, 0.002).unwrap())).unwrap();
        let m = means(&r);
        assert!(m.windows(2).all(|w| w[1] > w[0]), "{m:?}");
        assert_eq!(r.best_batch_size, Some(2));
    }

    #[test]
    fn sweep_requires_two_batch_sizes_and_stairs_only() {
        let mut p = plan(0.5, LatencyModel::new(0.05, 0.0, 0.0).unwrap());
        p.batch_sizes = vec![4];
        assert!(matches!(run_sweep(&p), Err(Error::InvalidConfig(_))));
        let mut p = plan(0.5, LatencyModel::new(0.05, 0.0, 0.0).unwrap());
        p.methods = vec![Method::Original];
        assert!(run_sweep(&p).is_err());
    }

    #[test]
    fn comparison_with_original_only_has_no_speedups() {
        let mut p = plan(0.5, LatencyModel::new(0.05, 0.0, 0.0).unwrap());
        p.methods = vec![Method::Original];
        p.batch_sizes = vec![4];
        let r = run_comparison(&p).unwrap();
        assert!(r.speedups.is_empty());
        assert_eq!(r.groups.len(), 1);
        assert_eq!(r.groups[0].stats.n, 3);
    }

    #[test]
    fn comparison_bleu_is_100_for_every_method() {
        let mut p = plan(0.7, LatencyModel::new(0.05, 0.001, 0.002).unwrap());
        p.methods = Method::ALL.to_vec();
        p.batch_sizes = vec![5];
        let r = run_comparison(&p).unwrap();
        assert_eq!(r.groups.len(), 3);
        assert!(r.groups.iter().all(|g| g.bleu_vs_original_min == 100.0));
        assert_eq!(r.speedups.len(), 2);
    }

    #[test]
    fn wallclock_excludes_warmup() {
        let mut p = plan(0.7, LatencyModel::new(0.05, 0.001, 0.002).unwrap());
        p.mode = Mode::Wallclock;
        p.batch_sizes = vec![2, 3];
        p.repetitions = 4;
        p.warmup_runs = 2;
        let r = run_sweep(&p).unwrap();
        assert!(r.groups.iter().all(|g| g.stats.n == 4));
        assert_eq!(r.runs.len(), 2 * 4 * 4);
    }

    #[test]
    fn invalid_prompt_is_config_error() {
        let mut p = plan(0.7, LatencyModel::new(0.05, 0.001, 0.002).unwrap());
        p.prompts = vec![Prompt::Ids(vec![1]), Prompt::Ids(vec![63])];
        let e = run_sweep(&p).unwrap_err();
        assert!(e.is_config(), "{e}");
    }
}

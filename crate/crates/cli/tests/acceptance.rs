//! Acceptance gate. Runs every headline criterion and prints one PASS/FAIL
//! line per criterion; exits non-zero if any fails.

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stairs_cli::{Config, DEFAULT_CONFIG};
use stairs_core::bench::{run_comparison, run_sweep, LatencyModel, ModelSpec};
use stairs_core::decode::GenConfig;
use stairs_core::metrics::speedup_percent;
use stairs_core::{
    argmax_token, greedy_generate, sequential_assisted_generate, stairs_generate, stairs_validate,
    AgreementDraft, HashLM, LanguageModel, Method, NGramLM, TokenId, TokenSeq, TokenizerMode,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn default_config() -> Config {
    Config::parse(DEFAULT_CONFIG, None).expect("default config parses")
}

fn default_agreement(cfg: &Config) -> f64 {
    match cfg.draft {
        ModelSpec::AgreementDraft { agreement, .. } => agreement,
        _ => panic!("default draft is an agreement draft"),
    }
}

const CORPUS: &str = "a b c a b d
b c a d d a
c a b b a c d
d d c b a";

fn random_pair(rng: &mut ChaCha8Rng) -> (Arc<dyn LanguageModel>, Arc<dyn LanguageModel>) {
    match rng.gen_range(0..3) {
        0 => {
            let size = rng.gen_range(3..48);
            let bias = [0.0, 0.03, 0.2][rng.gen_range(0..3)];
            let t: Arc<dyn LanguageModel> =
                Arc::new(HashLM::with_size(size, rng.gen(), rng.gen_range(1..5), bias).unwrap());
            let d: Arc<dyn LanguageModel> =
                Arc::new(AgreementDraft::new(t.clone(), rng.gen(), rng.gen()).unwrap());
            (t, d)
        }
        1 => {
            let size = rng.gen_range(3..48);
            let bias = [0.0, 0.03, 0.2][rng.gen_range(0..3)];
            let t =
                Arc::new(HashLM::with_size(size, rng.gen(), rng.gen_range(1..5), bias).unwrap());
            let d =
                Arc::new(HashLM::with_size(size, rng.gen(), rng.gen_range(1..5), bias).unwrap());
            (t, d)
        }
        _ => {
            let t: Arc<dyn LanguageModel> = Arc::new(
                NGramLM::train(CORPUS, rng.gen_range(1..5), TokenizerMode::Whitespace, 0.01)
                    .unwrap(),
            );
            let d: Arc<dyn LanguageModel> = if rng.gen_bool(0.5) {
                Arc::new(
                    NGramLM::train(CORPUS, rng.gen_range(1..4), TokenizerMode::Whitespace, 0.3)
                        .unwrap(),
                )
            } else {
                Arc::new(AgreementDraft::new(t.clone(), rng.gen(), rng.gen()).unwrap())
            };
            (t, d)
        }
    }
}

fn exact_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let cases = 1200;
    for case in 0..cases {
        let (target, draft) = random_pair(&mut rng);
        let content = target.vocabulary().len() as u32 - 2;
        let prompt =
            TokenSeq::from_ids((0..rng.gen_range(0..6)).map(|_| rng.gen_range(0..content)));
        let cfg = GenConfig::new(
            rng.gen_range(1..=64),
            rng.gen_range(1..=16),
            rng.gen_bool(0.8),
        );
        let (greedy, _) = greedy_generate(&*target, &prompt, &cfg).map_err(|e| e.to_string())?;
        let (stairs, _) =
            stairs_generate(&*target, &*draft, &prompt, &cfg).map_err(|e| e.to_string())?;
        let (seq, _) = sequential_assisted_generate(&*target, &*draft, &prompt, &cfg)
            .map_err(|e| e.to_string())?;
        ensure!(
            stairs == greedy,
            "case {case}: stairs output differs from greedy"
        );
        ensure!(
            seq == greedy,
            "case {case}: sequential output differs from greedy"
        );
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1} s");
    Ok(format!("{cases} random cases identical, {secs:.2} s"))
}

fn walk(
    draft: &[TokenId],
    truths: &[TokenId],
    eos: Option<TokenId>,
) -> (usize, Vec<TokenId>, bool) {
    let mut kept = Vec::new();
    let mut row = 0;
    while row < draft.len() && draft[row] == truths[row] {
        kept.push(draft[row]);
        row += 1;
    }
    kept.push(truths[row]);
    let accepted = row;
    match kept.iter().position(|&t| Some(t) == eos) {
        Some(i) => {
            kept.truncate(i + 1);
            (accepted, kept, true)
        }
        None => (accepted, kept, false),
    }
}

fn validation_oracle() -> Outcome {
    let mut checked = 0usize;
    for k in 0..=4u32 {
        for d_code in 0..3u32.pow(k) {
            let draft: Vec<TokenId> = (0..k).map(|i| TokenId(d_code / 3u32.pow(i) % 3)).collect();
            for a_code in 0..3u32.pow(k + 1) {
                let truths: Vec<TokenId> =
                    (0..=k).map(|i| TokenId(a_code / 3u32.pow(i) % 3)).collect();
                for eos in [None, Some(TokenId(0)), Some(TokenId(1)), Some(TokenId(2))] {
                    let got = stairs_validate(&draft, &truths, eos).map_err(|e| e.to_string())?;
                    let (a, c, h) = walk(&draft, &truths, eos);
                    ensure!(
                        got.accepted_draft_count == a
                            && got.committed.as_slice() == &c[..]
                            && got.hit_eos == h,
                        "mismatch for draft {draft:?}, argmaxes {truths:?}, eos {eos:?}"
                    );
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} enumerated cases, 0 mismatches"))
}

fn perfect_draft_calls() -> Outcome {
    let target = HashLM::with_size(64, 7, 4, 0.0).unwrap();
    let prompt = TokenSeq::from_ids([2]);
    let (_, t) = stairs_generate(&target, &target, &prompt, &GenConfig::new(12, 4, true)).unwrap();
    ensure!(
        t.totals.target_batch_calls == 3,
        "N=12 B=4 used {} batch calls",
        t.totals.target_batch_calls
    );
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut grid = 0;
    for _ in 0..400 {
        let m =
            HashLM::with_size(rng.gen_range(3..64), rng.gen(), rng.gen_range(1..5), 0.0).unwrap();
        let (n, b) = (rng.gen_range(1..=64), rng.gen_range(1..=16));
        let (_, t) = stairs_generate(
            &m,
            &m,
            &TokenSeq::from_ids([0]),
            &GenConfig::new(n, b, true),
        )
        .unwrap();
        ensure!(
            t.totals.target_batch_calls == n.div_ceil(b),
            "N={n} B={b}: {} batch calls",
            t.totals.target_batch_calls
        );
        grid += 1;
    }
    Ok(format!(
        "N=12 B=4 -> 3 batch calls; ceil(N/B) held on {grid} random (N, B)"
    ))
}

fn bleu_identity() -> Outcome {
    let cfg = default_config();
    let sweep = run_sweep(&cfg.sweep_plan()).map_err(|e| e.to_string())?;
    let b = sweep.best_batch_size.unwrap();
    let cmp = run_comparison(&cfg.compare_plan(b)).map_err(|e| e.to_string())?;
    for r in [&sweep, &cmp] {
        for o in &r.outputs {
            ensure!(
                o.bleu_vs_original == 100.0,
                "{} B={} prompt {}: BLEU {}",
                o.method,
                o.batch_size,
                o.prompt_id,
                o.bleu_vs_original
            );
        }
    }
    let s1 = speedup_percent(0.4853, 0.4016).unwrap();
    let s2 = speedup_percent(1.2232, 1.1059).unwrap();
    ensure!((s1 - 17.24).abs() <= 0.01, "speedup(0.4853, 0.4016) = {s1}");
    ensure!((s2 - 9.58).abs() <= 0.01, "speedup(1.2232, 1.1059) = {s2}");
    Ok(format!(
        "{} outputs at BLEU 100.00; speedups {s1:.4} and {s2:.4}",
        sweep.outputs.len() + cmp.outputs.len()
    ))
}

/// Expected time for `n` tokens: each iteration costs
/// `base + k (row + draft)` and commits `j + 1` tokens with
/// P(j) = a^j (1 - a) for j < k and a^k for j = k.
fn expected_time(n: usize, b: usize, a: f64, l: &LatencyModel) -> f64 {
    let k = b - 1;
    let cost = l.target_base + k as f64 * (l.target_per_row + l.draft_per_call);
    let mut e = vec![0.0; n + 1];
    for m in 1..=n {
        let mut acc = cost;
        for j in 0..=k {
            let pj = if j < k {
                a.powi(j as i32) * (1.0 - a)
            } else {
                a.powi(k as i32)
            };
            acc += pj * e[m.saturating_sub(j + 1)];
        }
        e[m] = acc;
    }
    e[n]
}

fn interior_optimum() -> Outcome {
    let cfg = default_config();
    let plan = cfg.sweep_plan();
    let r = run_sweep(&plan).map_err(|e| e.to_string())?;
    let got = r.best_batch_size.unwrap();
    let (lo, hi) = (
        *plan.batch_sizes.iter().min().unwrap(),
        *plan.batch_sizes.iter().max().unwrap(),
    );
    ensure!(
        got > lo && got < hi,
        "simulated argmin {got} is not strictly inside {lo}..{hi}"
    );
    let a = default_agreement(&cfg);
    let oracle = *plan
        .batch_sizes
        .iter()
        .min_by(|&&x, &&y| {
            expected_time(plan.max_new_tokens, x, a, &plan.latency).total_cmp(&expected_time(
                plan.max_new_tokens,
                y,
                a,
                &plan.latency,
            ))
        })
        .unwrap();
    ensure!(
        got.abs_diff(oracle) <= 1,
        "simulated argmin {got}, oracle argmin {oracle}"
    );
    Ok(format!(
        "simulated argmin B={got}, oracle argmin B={oracle}"
    ))
}

fn speedup_band() -> Outcome {
    let start = Instant::now();
    let cfg = default_config();
    let b = run_sweep(&cfg.sweep_plan())
        .map_err(|e| e.to_string())?
        .best_batch_size
        .unwrap();
    let r = run_comparison(&cfg.compare_plan(b)).map_err(|e| e.to_string())?;
    let s = r
        .speedups
        .iter()
        .find(|s| s.method == Method::Stairs)
        .unwrap()
        .speedup_percent;
    let secs = start.elapsed().as_secs_f64();
    ensure!(
        (9.0..=18.0).contains(&s),
        "stairs speedup {s:.2}% outside [9, 18]"
    );
    ensure!(secs < 10.0, "took {secs:.1} s");
    Ok(format!(
        "stairs vs original at B={b}: {s:.2}% ({secs:.2} s)"
    ))
}

fn determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let o = Command::new(env!("CARGO_BIN_EXE_stairs"))
            .args(["--seed", "7", "--out"])
            .arg(d.path())
            .args(["--format", "csv,json", "compare"])
            .env_remove("STAIRS_CONFIG")
            .output()
            .unwrap();
        ensure!(
            o.status.success(),
            "compare failed: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let files = [
        "sweep.csv",
        "sweep.json",
        "comparison.csv",
        "comparison.json",
    ];
    for f in files {
        let a = std::fs::read(dirs[0].path().join(f)).unwrap();
        let b = std::fs::read(dirs[1].path().join(f)).unwrap();
        ensure!(a == b, "{f} differs between identical runs");
    }
    Ok(format!(
        "{} report files byte-identical across two runs",
        files.len()
    ))
}

fn agreement_calibration() -> Outcome {
    let target: Arc<dyn LanguageModel> = Arc::new(HashLM::with_size(256, 3, 4, 0.0).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut prefixes = HashSet::new();
    while prefixes.len() < 10_000 {
        let len = rng.gen_range(2..16);
        prefixes.insert(TokenSeq::from_ids((0..len).map(|_| rng.gen_range(0..254))));
    }
    let truth: Vec<(TokenSeq, TokenId)> = prefixes
        .into_iter()
        .map(|p| {
            let t = argmax_token(&target.score_next(&p).unwrap());
            (p, t)
        })
        .collect();
    let mut worst: f64 = 0.0;
    let default = default_agreement(&default_config());
    for a in [0.0, 0.1, 0.3, 0.5, 0.7, 0.85, 0.9, default, 1.0] {
        let d = AgreementDraft::new(target.clone(), a, rng.gen()).unwrap();
        let hits = truth
            .iter()
            .filter(|(p, t)| argmax_token(&d.score_next(p).unwrap()) == *t)
            .count();
        let rate = hits as f64 / truth.len() as f64;
        ensure!(
            (rate - a).abs() <= 0.02,
            "agreement {a}: observed {rate:.4}"
        );
        worst = worst.max((rate - a).abs());
    }
    Ok(format!(
        "{} prefixes, max deviation {worst:.4}",
        truth.len()
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("exact equivalence", exact_equivalence),
        ("validation oracle", validation_oracle),
        ("perfect-draft call count", perfect_draft_calls),
        ("BLEU identity and speedup arithmetic", bleu_identity),
        ("interior-optimum sweep", interior_optimum),
        ("calibrated speedup band", speedup_band),
        ("determinism", determinism),
        ("agreement calibration", agreement_calibration),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

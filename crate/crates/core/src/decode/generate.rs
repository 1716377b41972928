use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::stairs::{build_stairs_batch, stairs_validate, ValidationResult};
use super::trace::{GenerationTrace, IterationRecord};
use super::GenConfig;
use crate::error::{Error, Result};
use crate::lm::{argmax_token, LanguageModel, TokenId, TokenSeq};

/// The three decoding strategies compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Original,
    SequentialAssisted,
    Stairs,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Original, Method::SequentialAssisted, Method::Stairs];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Original => "original",
            Method::SequentialAssisted => "sequential_assisted",
            Method::Stairs => "stairs",
        }
    }

    pub fn uses_draft(self) -> bool {
        !matches!(self, Method::Original)
    }

    pub fn run<T, D>(
        self,
        target: &T,
        draft: &D,
        prompt: &[TokenId],
        cfg: &GenConfig,
    ) -> Result<(TokenSeq, GenerationTrace)>
    where
        T: LanguageModel + ?Sized,
        D: LanguageModel + ?Sized,
    {
        match self {
            Method::Original => greedy_generate(target, prompt, cfg),
            Method::SequentialAssisted => sequential_assisted_generate(target, draft, prompt, cfg),
            Method::Stairs => stairs_generate(target, draft, prompt, cfg),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Method::Original),
            "sequential_assisted" => Ok(Method::SequentialAssisted),
            "stairs" => Ok(Method::Stairs),
            other => Err(Error::InvalidConfig(format!(
                "unknown method {other:?} (expected original, sequential_assisted or stairs)"
            ))),
        }
    }
}

fn eos_stop<M: LanguageModel + ?Sized>(model: &M, cfg: &GenConfig) -> Option<TokenId> {
    cfg.stop_on_eos.then(|| model.vocabulary().eos_id())
}

/// Appends one argmax token at a time until EOS or the length cap.
pub fn greedy_generate<M: LanguageModel + ?Sized>(
    model: &M,
    prompt: &[TokenId],
    cfg: &GenConfig,
) -> Result<(TokenSeq, GenerationTrace)> {
    cfg.validate()?;
    model.vocabulary().validate(prompt)?;
    let eos = eos_stop(model, cfg);

    let mut out = TokenSeq::from(prompt);
    let mut trace = GenerationTrace::default();
    for _ in 0..cfg.max_new_tokens {
        let next = argmax_token(&model.score_unchecked(&out));
        out.push(next);
        trace.record(
            IterationRecord {
                draft_proposed: 0,
                accepted: 0,
                committed: 1,
                target_rows: 1,
                batched: false,
                truncated: false,
            },
            0,
        );
        if Some(next) == eos {
            break;
        }
    }
    Ok((out, trace))
}

/// Greedily extends `prefix` by up to `k` draft tokens. With `stop_on_eos`
/// the proposal ends at (and includes) the first EOS.
pub fn draft_propose<M: LanguageModel + ?Sized>(
    draft: &M,
    prefix: &[TokenId],
    k: usize,
    stop_on_eos: bool,
) -> Result<TokenSeq> {
    draft.vocabulary().validate(prefix)?;
    let eos = draft.vocabulary().eos_id();
    let mut row = TokenSeq::from(prefix);
    for _ in 0..k {
        let t = argmax_token(&draft.score_unchecked(&row));
        row.push(t);
        if stop_on_eos && t == eos {
            break;
        }
    }
    Ok(TokenSeq::from(&row[prefix.len()..]))
}

fn check_pair<T, D>(target: &T, draft: &D, prompt: &[TokenId], cfg: &GenConfig) -> Result<()>
where
    T: LanguageModel + ?Sized,
    D: LanguageModel + ?Sized,
{
    cfg.validate()?;
    if target.vocabulary() != draft.vocabulary() {
        return Err(Error::InvalidConfig(format!(
            "draft model {} does not share the vocabulary of target {}",
            draft.name(),
            target.name()
        )));
    }
    target.vocabulary().validate(prompt)
}

/// Appends a validated block, honouring the length cap. Returns true when
/// generation should stop.
fn commit(
    out: &mut TokenSeq,
    trace: &mut GenerationTrace,
    v: &ValidationResult,
    draft_len: usize,
    target_rows: usize,
    batched: bool,
    cfg: &GenConfig,
) -> bool {
    let remaining = cfg.max_new_tokens - trace.totals.tokens_generated;
    let take = v.committed.len().min(remaining);
    out.extend_from_slice(&v.committed[..take]);
    trace.record(
        IterationRecord {
            draft_proposed: draft_len,
            accepted: v.accepted_draft_count,
            committed: take,
            target_rows,
            batched,
            truncated: take < v.committed.len(),
        },
        draft_len,
    );
    v.hit_eos || trace.totals.tokens_generated >= cfg.max_new_tokens
}

/// Stairs-assisted greedy generation.
///
/// Each iteration the draft proposes `B - 1` tokens, the target scores the
/// `B` nested prefixes in one batch call, and [`stairs_validate`] decides
/// which draft tokens survive. Output is identical to
/// `greedy_generate(target, ..)`.
pub fn stairs_generate<T, D>(
    target: &T,
    draft: &D,
    prompt: &[TokenId],
    cfg: &GenConfig,
) -> Result<(TokenSeq, GenerationTrace)>
where
    T: LanguageModel + ?Sized,
    D: LanguageModel + ?Sized,
{
    check_pair(target, draft, prompt, cfg)?;
    let eos = eos_stop(target, cfg);

    let mut out = TokenSeq::from(prompt);
    let mut trace = GenerationTrace::default();
    loop {
        let proposal = draft_propose(draft, &out, cfg.lookahead(), cfg.stop_on_eos)?;
        let batch = build_stairs_batch(&out, &proposal);
        let argmaxes: Vec<TokenId> = target
            .score_batch(&batch.rows)?
            .iter()
            .map(argmax_token)
            .collect();
        let v = stairs_validate(&proposal, &argmaxes, eos)?;
        if commit(
            &mut out,
            &mut trace,
            &v,
            proposal.len(),
            batch.rows.len(),
            true,
            cfg,
        ) {
            break;
        }
    }
    Ok((out, trace))
}

/// Assisted generation with left-to-right checking: one single-row target
/// call per validated position, stopping at the first disagreement.
pub fn sequential_assisted_generate<T, D>(
    target: &T,
    draft: &D,
    prompt: &[TokenId],
    cfg: &GenConfig,
) -> Result<(TokenSeq, GenerationTrace)>
where
    T: LanguageModel + ?Sized,
    D: LanguageModel + ?Sized,
{
    check_pair(target, draft, prompt, cfg)?;
    let eos = eos_stop(target, cfg);

    let mut out = TokenSeq::from(prompt);
    let mut trace = GenerationTrace::default();
    loop {
        let proposal = draft_propose(draft, &out, cfg.lookahead(), cfg.stop_on_eos)?;
        let mut row = out.clone();
        let mut argmaxes = Vec::with_capacity(proposal.len() + 1);
        for i in 0..=proposal.len() {
            let t = argmax_token(&target.score_next(&row)?);
            argmaxes.push(t);
            if i == proposal.len() || t != proposal[i] {
                break;
            }
            row.push(proposal[i]);
        }
        let checked = argmaxes.len() - 1;
        let v = stairs_validate(&proposal[..checked], &argmaxes, eos)?;
        if commit(
            &mut out,
            &mut trace,
            &v,
            proposal.len(),
            argmaxes.len(),
            false,
            cfg,
        ) {
            break;
        }
    }
    Ok((out, trace))
}

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    /// 0 to 100; 100 means the candidate reproduces the reference.
    pub value: f64,
    /// Clipped n-gram precision for n = 1, 2, ...
    pub precisions: Vec<f64>,
    pub brevity_penalty: f64,
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    for w in tokens.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

/// Sentence-level BLEU-4 against a single reference, without smoothing.
pub fn bleu<T: Eq + Hash>(candidate: &[T], reference: &[T]) -> Result<BleuScore> {
    bleu_with_order(candidate, reference, MAX_ORDER)
}

/// BLEU with n-gram orders `1..=max_n`.
///
/// Any order with zero clipped matches (including orders longer than the
/// candidate) makes the score 0. An empty candidate scores 0 with a brevity
/// penalty of 0.
pub fn bleu_with_order<T: Eq + Hash>(
    candidate: &[T],
    reference: &[T],
    max_n: usize,
) -> Result<BleuScore> {
    if reference.is_empty() {
        return Err(Error::InvalidInput("BLEU reference is empty".into()));
    }
    if max_n == 0 {
        return Err(Error::InvalidInput("BLEU order must be at least 1".into()));
    }

    let precisions: Vec<f64> = (1..=max_n)
        .map(|n| {
            if candidate.len() < n {
                return 0.0;
            }
            let cand = ngram_counts(candidate, n);
            let refc = ngram_counts(reference, n);
            let clipped: usize = cand
                .iter()
                .map(|(g, &c)| c.min(refc.get(g).copied().unwrap_or(0)))
                .sum();
            clipped as f64 / (candidate.len() - n + 1) as f64
        })
        .collect();

    let (c, r) = (candidate.len() as f64, reference.len() as f64);
    let brevity_penalty = if c > r { 1.0 } else { (1.0 - r / c).exp() };

    let value = if precisions.contains(&0.0) {
        0.0
    } else {
        let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / max_n as f64;
        100.0 * brevity_penalty * log_mean.exp()
    };
    Ok(BleuScore {
        value: value.clamp(0.0, 100.0),
        precisions,
        brevity_penalty,
    })
}

use serde::{Deserialize, Serialize};

/// One decoding iteration: a draft proposal (possibly empty), the target
/// calls spent on it, and what was committed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub draft_proposed: usize,
    pub accepted: usize,
    /// Tokens appended to the output, after EOS and length-cap truncation.
    pub committed: usize,
    /// Rows the target scored this iteration.
    pub target_rows: usize,
    /// Whether those rows went out as one batch call or as single calls.
    pub batched: bool,
    /// The commit was cut short by `max_new_tokens`.
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceTotals {
    pub target_single_calls: usize,
    pub target_batch_calls: usize,
    pub target_rows_scored: usize,
    pub draft_calls: usize,
    pub tokens_generated: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationTrace {
    pub iterations: Vec<IterationRecord>,
    pub totals: TraceTotals,
}

impl GenerationTrace {
    pub(crate) fn record(&mut self, rec: IterationRecord, draft_calls: usize) {
        let t = &mut self.totals;
        if rec.batched {
            t.target_batch_calls += 1;
        } else {
            t.target_single_calls += rec.target_rows;
        }
        t.target_rows_scored += rec.target_rows;
        t.draft_calls += draft_calls;
        t.tokens_generated += rec.committed;
        self.iterations.push(rec);
    }

    pub fn accepted_total(&self) -> usize {
        self.iterations.iter().map(|r| r.accepted).sum()
    }

    pub fn committed_total(&self) -> usize {
        self.iterations.iter().map(|r| r.committed).sum()
    }

    /// Row counts of every batched target call, in order.
    pub fn batch_call_rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.iterations
            .iter()
            .filter(|r| r.batched)
            .map(|r| r.target_rows)
    }

    /// Checks the internal bookkeeping: per-iteration commits add up to the
    /// token total, every iteration makes progress, and call counts agree
    /// with the per-iteration records.
    pub fn is_consistent(&self) -> bool {
        let t = &self.totals;
        let batch_calls = self.iterations.iter().filter(|r| r.batched).count();
        let singles: usize = self
            .iterations
            .iter()
            .filter(|r| !r.batched)
            .map(|r| r.target_rows)
            .sum();
        let rows: usize = self.iterations.iter().map(|r| r.target_rows).sum();
        self.committed_total() == t.tokens_generated
            && self.iterations.iter().all(|r| r.committed >= 1)
            && batch_calls == t.target_batch_calls
            && singles == t.target_single_calls
            && rows == t.target_rows_scored
            && t.target_batch_calls <= t.tokens_generated
    }
}

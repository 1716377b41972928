//! Greedy generation strategies.
//!
//! * [`greedy_generate`]: one target call per token.
//! * [`sequential_assisted_generate`]: a draft model proposes `k` tokens and
//!   the target checks them left to right, one single-row call per position.
//! * [`stairs_generate`]: the same proposal is expanded into `k + 1` nested
//!   prefixes that the target scores in a single batch call, after which
//!   [`stairs_validate`] walks the row predictions to decide what to keep.
//!
//! All three produce the target's greedy output token for token; they differ
//! only in how many and what kind of target calls they make, which the
//! returned [`GenerationTrace`] records.

mod generate;
mod stairs;
mod trace;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generate::{
    draft_propose, greedy_generate, sequential_assisted_generate, stairs_generate, Method,
};
pub use stairs::{build_stairs_batch, stairs_validate, StairsBatch, ValidationResult};
pub use trace::{GenerationTrace, IterationRecord, TraceTotals};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    pub max_new_tokens: usize,
    /// Number of stairs rows per target call; the draft lookahead is one less.
    pub batch_size: usize,
    pub stop_on_eos: bool,
}

impl GenConfig {
    pub fn new(max_new_tokens: usize, batch_size: usize, stop_on_eos: bool) -> Self {
        GenConfig {
            max_new_tokens,
            batch_size,
            stop_on_eos,
        }
    }

    pub fn lookahead(&self) -> usize {
        self.batch_size.saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_new_tokens == 0 {
            return Err(Error::InvalidConfig(
                "max_new_tokens must be at least 1".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig::new(32, 4, true)
    }
}

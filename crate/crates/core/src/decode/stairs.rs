use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lm::{TokenId, TokenSeq};

/// Nested prefixes scored together: `rows[0]` is the committed prefix and
/// each following row appends one more draft token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StairsBatch {
    pub rows: Vec<TokenSeq>,
    pub draft: TokenSeq,
}

impl StairsBatch {
    pub fn batch_size(&self) -> usize {
        self.rows.len()
    }
}

pub fn build_stairs_batch(prefix: &[TokenId], draft: &[TokenId]) -> StairsBatch {
    let mut rows = Vec::with_capacity(draft.len() + 1);
    let mut row = TokenSeq::from(prefix);
    rows.push(row.clone());
    for &d in draft {
        row.push(d);
        rows.push(row.clone());
    }
    StairsBatch {
        rows,
        draft: TokenSeq::from(draft),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationResult {
    pub accepted_draft_count: usize,
    /// Accepted draft tokens followed by the target's own next token,
    /// truncated after the first EOS.
    pub committed: TokenSeq,
    pub hit_eos: bool,
}

/// Walks the row predictions of a stairs batch.
///
/// `row_argmaxes[i]` is the target's choice after `rows[i]`. The walk starts
/// with row 0's prediction as ground truth; while that prediction equals the
/// next draft token the draft token is kept and the following row's
/// prediction becomes the new ground truth. The last ground truth is always
/// committed, so at least one token comes out.
///
/// With `eos = Some(id)` the committed block is cut after the first `id`.
pub fn stairs_validate(
    draft: &[TokenId],
    row_argmaxes: &[TokenId],
    eos: Option<TokenId>,
) -> Result<ValidationResult> {
    if row_argmaxes.len() != draft.len() + 1 {
        return Err(Error::ContractViolation(format!(
            "{} row predictions for a draft of {} tokens (expected {})",
            row_argmaxes.len(),
            draft.len(),
            draft.len() + 1
        )));
    }
    let accepted = draft
        .iter()
        .zip(row_argmaxes)
        .take_while(|(d, truth)| d == truth)
        .count();
    let mut committed = TokenSeq::from(&draft[..accepted]);
    committed.push(row_argmaxes[accepted]);

    let mut hit_eos = false;
    if let Some(eos) = eos {
        if let Some(pos) = committed.iter().position(|&t| t == eos) {
            committed.truncate(pos + 1);
            hit_eos = true;
        }
    }
    Ok(ValidationResult {
        accepted_draft_count: accepted,
        committed,
        hit_eos,
    })
}

//! Token types, the autoregressive model interface and deterministic
//! reference models.
//!
//! Every model here is a pure function from a prefix to a vector of
//! unnormalized scores. Greedy decoding only ever needs the argmax of that
//! vector, so no probabilities are computed anywhere.

mod agreement;
mod hash;
mod ngram;

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use agreement::AgreementDraft;
pub use hash::{hash_tokens, mix64, unit_interval, HashLM};
pub use ngram::{encode_text, train_ngram, NGramLM, TokenizerMode, DEFAULT_SMOOTHING};

/// Index into a vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<u32> for TokenId {
    fn from(v: u32) -> Self {
        TokenId(v)
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Ordered list of token ids. Prompts, drafts and outputs are all `TokenSeq`s.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq(Vec<TokenId>);

impl TokenSeq {
    pub fn new() -> Self {
        TokenSeq(Vec::new())
    }

    pub fn from_ids<I: IntoIterator<Item = u32>>(ids: I) -> Self {
        TokenSeq(ids.into_iter().map(TokenId).collect())
    }

    pub fn push(&mut self, t: TokenId) {
        self.0.push(t);
    }

    pub fn extend_from_slice(&mut self, ts: &[TokenId]) {
        self.0.extend_from_slice(ts);
    }

    pub fn truncate(&mut self, len: usize) {
        self.0.truncate(len);
    }

    pub fn as_slice(&self) -> &[TokenId] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<TokenId> {
        self.0
    }

    pub fn raw_ids(&self) -> Vec<u32> {
        self.0.iter().map(|t| t.0).collect()
    }
}

impl Deref for TokenSeq {
    type Target = [TokenId];

    fn deref(&self) -> &[TokenId] {
        &self.0
    }
}

impl From<Vec<TokenId>> for TokenSeq {
    fn from(v: Vec<TokenId>) -> Self {
        TokenSeq(v)
    }
}

impl From<&[TokenId]> for TokenSeq {
    fn from(v: &[TokenId]) -> Self {
        TokenSeq(v.to_vec())
    }
}

impl FromIterator<TokenId> for TokenSeq {
    fn from_iter<I: IntoIterator<Item = TokenId>>(iter: I) -> Self {
        TokenSeq(iter.into_iter().collect())
    }
}

pub const EOS_TOKEN: &str = "<eos>";
pub const PAD_TOKEN: &str = "<pad>";

/// Token strings with the two reserved ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    eos_id: TokenId,
    pad_id: TokenId,
}

impl Vocabulary {
    pub fn new(tokens: Vec<String>, eos_id: TokenId, pad_id: TokenId) -> Result<Self> {
        let n = tokens.len();
        if n < 3 {
            return Err(Error::InvalidConfig(format!(
                "vocabulary needs at least one content token plus EOS and PAD, got {n} entries"
            )));
        }
        if eos_id.index() >= n || pad_id.index() >= n {
            return Err(Error::InvalidConfig(format!(
                "special ids eos={eos_id} pad={pad_id} out of range for {n} tokens"
            )));
        }
        if eos_id == pad_id {
            return Err(Error::InvalidConfig("eos_id and pad_id must differ".into()));
        }
        let mut seen = std::collections::HashSet::with_capacity(n);
        for t in &tokens {
            if !seen.insert(t.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate token string {t:?}"
                )));
            }
        }
        Ok(Vocabulary {
            tokens,
            eos_id,
            pad_id,
        })
    }

    /// `content` tokens named `w0`, `w1`, ... followed by EOS and PAD.
    pub fn synthetic(content: usize) -> Result<Self> {
        let mut tokens: Vec<String> = (0..content).map(|i| format!("w{i}")).collect();
        tokens.push(EOS_TOKEN.to_string());
        tokens.push(PAD_TOKEN.to_string());
        let eos = TokenId(content as u32);
        let pad = TokenId(content as u32 + 1);
        Vocabulary::new(tokens, eos, pad)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn eos_id(&self) -> TokenId {
        self.eos_id
    }

    pub fn pad_id(&self) -> TokenId {
        self.pad_id
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token_str(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id.index()).map(String::as_str)
    }

    pub fn id_of(&self, token: &str) -> Option<TokenId> {
        self.tokens
            .iter()
            .position(|t| t == token)
            .map(|i| TokenId(i as u32))
    }

    /// Ids of every token that a model may legitimately predict.
    pub fn predictable_ids(&self) -> impl Iterator<Item = TokenId> + '_ {
        (0..self.tokens.len() as u32)
            .map(TokenId)
            .filter(move |&t| t != self.pad_id)
    }

    /// Checks that every id is in range and none is PAD.
    pub fn validate(&self, ids: &[TokenId]) -> Result<()> {
        for (pos, &t) in ids.iter().enumerate() {
            if t.index() >= self.tokens.len() {
                return Err(Error::InvalidInput(format!(
                    "token id {t} at position {pos} is outside vocabulary of size {}",
                    self.tokens.len()
                )));
            }
            if t == self.pad_id {
                return Err(Error::InvalidInput(format!(
                    "pad token at position {pos}; rows must be passed with true lengths"
                )));
            }
        }
        Ok(())
    }

    /// Maps token ids back to their strings, dropping nothing.
    pub fn decode(&self, ids: &[TokenId]) -> Vec<String> {
        ids.iter()
            .map(|&t| {
                self.token_str(t)
                    .map(str::to_string)
                    .unwrap_or_else(|| format!("<unk:{t}>"))
            })
            .collect()
    }
}

/// Unnormalized scores, one per vocabulary entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Logits(Vec<f64>);

impl Logits {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite score at index {i}"
            )));
        }
        Ok(Logits(scores))
    }

    pub(crate) fn from_finite(scores: Vec<f64>) -> Self {
        debug_assert!(scores.iter().all(|s| s.is_finite()));
        Logits(scores)
    }

    pub fn scores(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Bitwise comparison, stricter than `==` (distinguishes `0.0` and `-0.0`).
    pub fn bit_eq(&self, other: &Logits) -> bool {
        self.0.len() == other.0.len()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Index of the highest score. Ties go to the lowest token id.
pub fn argmax_token(logits: &Logits) -> TokenId {
    let mut best = 0usize;
    let scores = logits.scores();
    for i in 1..scores.len() {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    TokenId(best as u32)
}

/// Row-major, right-padded storage for a batch of variable-length rows.
///
/// Padding is a storage detail only: [`PaddedBatch::row`] always returns the
/// row at its true length, so pad ids never reach a scorer.
#[derive(Debug, Clone)]
pub struct PaddedBatch {
    cells: Vec<TokenId>,
    lengths: Vec<usize>,
    width: usize,
}

impl PaddedBatch {
    pub fn from_rows(rows: &[TokenSeq], pad: TokenId) -> Self {
        let width = rows.iter().map(|r| r.len()).max().unwrap_or(0);
        let mut cells = Vec::with_capacity(width * rows.len());
        let mut lengths = Vec::with_capacity(rows.len());
        for r in rows {
            cells.extend_from_slice(r);
            cells.extend(std::iter::repeat_n(pad, width - r.len()));
            lengths.push(r.len());
        }
        PaddedBatch {
            cells,
            lengths,
            width,
        }
    }

    pub fn rows(&self) -> usize {
        self.lengths.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, i: usize) -> &[TokenId] {
        let start = i * self.width;
        &self.cells[start..start + self.lengths[i]]
    }

    /// The full padded row, including trailing pad cells.
    pub fn padded_row(&self, i: usize) -> &[TokenId] {
        let start = i * self.width;
        &self.cells[start..start + self.width]
    }
}

/// A deterministic next-token scorer.
///
/// Implementors provide [`LanguageModel::score_unchecked`]; the checked
/// single-row and batch entry points are provided on top of it so that batch
/// results are, by construction, bit-identical to single-row results.
pub trait LanguageModel: Send + Sync {
    fn vocabulary(&self) -> &Vocabulary;

    fn name(&self) -> &str;

    /// Scores a prefix that the caller has already validated.
    fn score_unchecked(&self, prefix: &[TokenId]) -> Logits;

    fn score_next(&self, prefix: &[TokenId]) -> Result<Logits> {
        self.vocabulary().validate(prefix)?;
        Ok(self.score_unchecked(prefix))
    }

    fn score_batch(&self, rows: &[TokenSeq]) -> Result<Vec<Logits>> {
        if rows.is_empty() {
            return Err(Error::InvalidInput(
                "score_batch called with no rows".into(),
            ));
        }
        for (i, r) in rows.iter().enumerate() {
            self.vocabulary()
                .validate(r)
                .map_err(|e| Error::InvalidInput(format!("row {i}: {e}")))?;
        }
        let batch = PaddedBatch::from_rows(rows, self.vocabulary().pad_id());
        Ok((0..batch.rows())
            .map(|i| self.score_unchecked(batch.row(i)))
            .collect())
    }
}

impl<M: LanguageModel + ?Sized> LanguageModel for std::sync::Arc<M> {
    fn vocabulary(&self) -> &Vocabulary {
        (**self).vocabulary()
    }

    fn name(&self) -> &str {
        (**self).name()
    }

    fn score_unchecked(&self, prefix: &[TokenId]) -> Logits {
        (**self).score_unchecked(prefix)
    }

    fn score_next(&self, prefix: &[TokenId]) -> Result<Logits> {
        (**self).score_next(prefix)
    }

    fn score_batch(&self, rows: &[TokenSeq]) -> Result<Vec<Logits>> {
        (**self).score_batch(rows)
    }
}

impl<M: LanguageModel + ?Sized> LanguageModel for &M {
    fn vocabulary(&self) -> &Vocabulary {
        (**self).vocabulary()
    }

    fn name(&self) -> &str {
        (**self).name()
    }

    fn score_unchecked(&self, prefix: &[TokenId]) -> Logits {
        (**self).score_unchecked(prefix)
    }

    fn score_next(&self, prefix: &[TokenId]) -> Result<Logits> {
        (**self).score_next(prefix)
    }

    fn score_batch(&self, rows: &[TokenSeq]) -> Result<Vec<Logits>> {
        (**self).score_batch(rows)
    }
}

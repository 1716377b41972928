use std::sync::Arc;

use super::hash::{hash_tokens, mix64, unit_interval};
use super::{argmax_token, LanguageModel, Logits, TokenId, Vocabulary};
use crate::error::{Error, Result};

const AGREE_SALT: u64 = 0xA61E_E0A6_1EE0_A61E;
const ALT_SALT: u64 = 0x0A17_0A17_0A17_0A17;

/// Draft model with a controllable argmax agreement rate against a target.
///
/// For each prefix a hash of `(seed, prefix)` is mapped to `u` in `[0, 1)`.
/// When `u < agreement` the target's logits are returned unchanged; otherwise
/// a deterministic token other than the target's argmax is promoted to the
/// top. Agreement at a position therefore behaves like an independent
/// Bernoulli draw that is reproducible from the seed.
#[derive(Clone)]
pub struct AgreementDraft {
    target: Arc<dyn LanguageModel>,
    agreement: f64,
    seed: u64,
    name: String,
}

impl std::fmt::Debug for AgreementDraft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AgreementDraft")
            .field("target", &self.target.name())
            .field("agreement", &self.agreement)
            .field("seed", &self.seed)
            .finish()
    }
}

impl AgreementDraft {
    pub fn new(target: Arc<dyn LanguageModel>, agreement: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&agreement) {
            return Err(Error::InvalidConfig(format!(
                "agreement must lie in [0, 1], got {agreement}"
            )));
        }
        let name = format!(
            "agreement-draft({agreement}, seed={seed}) of {}",
            target.name()
        );
        Ok(AgreementDraft {
            target,
            agreement,
            seed,
            name,
        })
    }

    pub fn agreement(&self) -> f64 {
        self.agreement
    }

    /// Whether the draft copies the target's argmax after `prefix`.
    pub fn agrees_at(&self, prefix: &[TokenId]) -> bool {
        unit_interval(hash_tokens(self.seed ^ AGREE_SALT, prefix)) < self.agreement
    }

    fn alternative(&self, prefix: &[TokenId], target_best: TokenId) -> TokenId {
        let v = self.target.vocabulary();
        let candidates: Vec<TokenId> = v
            .predictable_ids()
            .filter(|&t| t != target_best && t != v.eos_id())
            .collect();
        if candidates.is_empty() {
            // Only EOS is left to choose from.
            return v.eos_id();
        }
        let h = mix64(hash_tokens(self.seed ^ ALT_SALT, prefix));
        candidates[(h % candidates.len() as u64) as usize]
    }
}

impl LanguageModel for AgreementDraft {
    fn vocabulary(&self) -> &Vocabulary {
        self.target.vocabulary()
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn score_unchecked(&self, prefix: &[TokenId]) -> Logits {
        let base = self.target.score_unchecked(prefix);
        if self.agrees_at(prefix) {
            return base;
        }
        let best = argmax_token(&base);
        let alt = self.alternative(prefix, best);
        let top = base.scores()[best.index()];
        let mut scores = base.scores().to_vec();
        scores[alt.index()] = top + 1.0;
        Logits::from_finite(scores)
    }
}

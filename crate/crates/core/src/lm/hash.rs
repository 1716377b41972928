use super::{LanguageModel, Logits, TokenId, Vocabulary};
use crate::error::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const EOS_SALT: u64 = 0xE05E_05E0_5E05_E05E;

/// SplitMix64 finalizer. All reference-model randomness flows through this
/// function, so golden values are identical on every platform.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash of a seed and an ordered run of token ids. Length is folded in last,
/// so `[]` and `[0]` hash differently.
pub fn hash_tokens(seed: u64, tokens: &[TokenId]) -> u64 {
    let mut h = mix64(seed ^ GOLDEN_GAMMA);
    for t in tokens {
        h = mix64(h.wrapping_add(GOLDEN_GAMMA) ^ u64::from(t.0));
    }
    mix64(h ^ (tokens.len() as u64).wrapping_mul(GOLDEN_GAMMA))
}

/// Top 53 bits of `h` as a float in `[0, 1)`.
#[inline]
pub fn unit_interval(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Stand-in for a trained model: scores are a pure function of the seed and
/// the last `context_window` tokens of the prefix.
///
/// Content tokens score in `[0, 1)`. EOS scores `2.0` (and therefore wins)
/// for a fraction `eos_bias` of contexts and `-1.0` otherwise. PAD always
/// scores `-1.0`.
#[derive(Debug, Clone)]
pub struct HashLM {
    vocab: Vocabulary,
    seed: u64,
    context_window: usize,
    eos_bias: f64,
    name: String,
}

impl HashLM {
    pub fn new(vocab: Vocabulary, seed: u64, context_window: usize, eos_bias: f64) -> Result<Self> {
        if context_window == 0 {
            return Err(Error::InvalidConfig(
                "context_window must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&eos_bias) {
            return Err(Error::InvalidConfig(format!(
                "eos_bias must lie in [0, 1], got {eos_bias}"
            )));
        }
        let name = format!(
            "hash(seed={seed}, window={context_window}, eos_bias={eos_bias}, |V|={})",
            vocab.len()
        );
        Ok(HashLM {
            vocab,
            seed,
            context_window,
            eos_bias,
            name,
        })
    }

    /// Synthetic vocabulary of `size` entries in total (the last two being
    /// EOS and PAD).
    pub fn with_size(size: usize, seed: u64, context_window: usize, eos_bias: f64) -> Result<Self> {
        if size < 3 {
            return Err(Error::InvalidConfig(format!(
                "hash model vocabulary size must be at least 3, got {size}"
            )));
        }
        HashLM::new(
            Vocabulary::synthetic(size - 2)?,
            seed,
            context_window,
            eos_bias,
        )
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn context_window(&self) -> usize {
        self.context_window
    }
}

impl LanguageModel for HashLM {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn score_unchecked(&self, prefix: &[TokenId]) -> Logits {
        let tail = &prefix[prefix.len().saturating_sub(self.context_window)..];
        let h = hash_tokens(self.seed, tail);
        let eos = self.vocab.eos_id().index();
        let pad = self.vocab.pad_id().index();
        let scores = (0..self.vocab.len())
            .map(|v| {
                if v == pad {
                    -1.0
                } else if v == eos {
                    if unit_interval(mix64(h ^ EOS_SALT)) < self.eos_bias {
                        2.0
                    } else {
                        -1.0
                    }
                } else {
                    unit_interval(mix64(h ^ mix64(v as u64 + 1)))
                }
            })
            .collect();
        Logits::from_finite(scores)
    }
}

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::latency::LatencyModel;
use crate::decode::Method;
use crate::error::{Error, Result};
use crate::lm::{
    encode_text, AgreementDraft, HashLM, LanguageModel, NGramLM, TokenSeq, TokenizerMode,
    DEFAULT_SMOOTHING,
};

const DRAFT_SEED_SALT: u64 = 0x5EED_D4AF_75EE_D000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Time real decoding runs with a monotonic clock.
    Wallclock,
    /// Charge each run's trace against a [`LatencyModel`].
    Simulated,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wallclock" => Ok(Mode::Wallclock),
            "simulated" => Ok(Mode::Simulated),
            other => Err(Error::InvalidConfig(format!(
                "unknown mode {other:?} (expected wallclock or simulated)"
            ))),
        }
    }
}

/// Declarative description of a reference model. Seeds left unset are
/// derived from the plan seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Hash {
        vocab_size: usize,
        context_window: usize,
        #[serde(default)]
        eos_bias: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Ngram {
        corpus: PathBuf,
        order: usize,
        #[serde(default = "default_tokenizer")]
        tokenizer: TokenizerMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        smoothing: Option<f64>,
    },
    /// Only valid as a draft: wraps the target.
    AgreementDraft {
        agreement: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

fn default_tokenizer() -> TokenizerMode {
    TokenizerMode::Whitespace
}

impl ModelSpec {
    fn tokenizer(&self) -> TokenizerMode {
        match self {
            ModelSpec::Ngram { tokenizer, .. } => *tokenizer,
            _ => TokenizerMode::Whitespace,
        }
    }

    fn build(
        &self,
        seed: u64,
        target: Option<&Arc<dyn LanguageModel>>,
    ) -> Result<Arc<dyn LanguageModel>> {
        Ok(match self {
            ModelSpec::Hash {
                vocab_size,
                context_window,
                eos_bias,
                seed: s,
            } => Arc::new(HashLM::with_size(
                *vocab_size,
                s.unwrap_or(seed),
                *context_window,
                *eos_bias,
            )?),
            ModelSpec::Ngram {
                corpus,
                order,
                tokenizer,
                smoothing,
            } => {
                let text = std::fs::read_to_string(corpus).map_err(|e| Error::io(corpus, e))?;
                Arc::new(NGramLM::train(
                    &text,
                    *order,
                    *tokenizer,
                    smoothing.unwrap_or(DEFAULT_SMOOTHING),
                )?)
            }
            ModelSpec::AgreementDraft { agreement, seed: s } => {
                let target = target.ok_or_else(|| {
                    Error::InvalidConfig(
                        "agreement-draft can only be used as the draft model".into(),
                    )
                })?;
                Arc::new(AgreementDraft::new(
                    target.clone(),
                    *agreement,
                    s.unwrap_or(seed),
                )?)
            }
        })
    }
}

/// A prompt given either as raw token ids or as text to tokenize against the
/// target vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Prompt {
    Ids(Vec<u32>),
    Text(String),
}

/// Everything needed to reproduce one sweep or comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub mode: Mode,
    pub methods: Vec<Method>,
    pub batch_sizes: Vec<usize>,
    pub repetitions: usize,
    pub warmup_runs: usize,
    pub prompts: Vec<Prompt>,
    pub target: ModelSpec,
    pub draft: ModelSpec,
    pub latency: LatencyModel,
    pub max_new_tokens: usize,
    pub stop_on_eos: bool,
    pub seed: u64,
}

/// Built models and tokenized prompts for a plan.
pub struct ModelSet {
    pub target: Arc<dyn LanguageModel>,
    pub draft: Arc<dyn LanguageModel>,
    pub prompts: Vec<TokenSeq>,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("plan lists no methods".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig(
                "repetitions must be at least 1".into(),
            ));
        }
        if self.batch_sizes.is_empty() {
            return Err(Error::InvalidConfig("plan lists no batch sizes".into()));
        }
        if self.batch_sizes.contains(&0) {
            return Err(Error::InvalidConfig(
                "batch sizes must be at least 1".into(),
            ));
        }
        if self.prompts.is_empty() {
            return Err(Error::InvalidConfig("plan lists no prompts".into()));
        }
        if self.max_new_tokens == 0 {
            return Err(Error::InvalidConfig(
                "max_new_tokens must be at least 1".into(),
            ));
        }
        if matches!(self.target, ModelSpec::AgreementDraft { .. }) {
            return Err(Error::InvalidConfig(
                "agreement-draft can only be used as the draft model".into(),
            ));
        }
        self.latency.validate()
    }

    pub fn draft_seed(&self) -> u64 {
        self.seed ^ DRAFT_SEED_SALT
    }

    pub fn build_models(&self) -> Result<ModelSet> {
        let target = self.target.build(self.seed, None)?;
        let draft = self.draft.build(self.draft_seed(), Some(&target))?;
        if draft.vocabulary() != target.vocabulary() {
            return Err(Error::InvalidConfig(format!(
                "draft model {} does not share the vocabulary of target {}",
                draft.name(),
                target.name()
            )));
        }
        let tokenizer = self.target.tokenizer();
        let prompts = self
            .prompts
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let seq = match p {
                    Prompt::Ids(ids) => Ok(TokenSeq::from_ids(ids.iter().copied())),
                    Prompt::Text(t) => encode_text(target.vocabulary(), tokenizer, t),
                };
                seq.and_then(|seq| target.vocabulary().validate(&seq).map(|_| seq))
                    .map_err(|e| Error::InvalidConfig(format!("prompt {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ModelSet {
            target,
            draft,
            prompts,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn hash_plan() -> ExperimentPlan {
        ExperimentPlan {
            mode: Mode::Simulated,
            methods: vec![Method::Stairs],
            batch_sizes: vec![2, 3],
            repetitions: 2,
            warmup_runs: 1,
            prompts: vec![Prompt::Ids(vec![1, 2]), Prompt::Text("w3 w4".into())],
            target: ModelSpec::Hash {
                vocab_size: 32,
                context_window: 3,
                eos_bias: 0.0,
                seed: None,
            },
            draft: ModelSpec::AgreementDraft {
                agreement: 0.8,
                seed: None,
            },
            latency: LatencyModel::new(0.05, 0.001, 0.002).unwrap(),
            max_new_tokens: 8,
            stop_on_eos: true,
            seed: 1,
        }
    }

    #[test]
    fn builds_models_and_prompts() {
        let set = hash_plan().build_models().unwrap();
        assert_eq!(set.prompts[1], TokenSeq::from_ids([3, 4]));
    }

    #[test]
    fn rejects_bad_plans() {
        let mut p = hash_plan();
        p.repetitions = 0;
        assert!(p.validate().is_err());
        let mut p = hash_plan();
        p.batch_sizes = vec![0];
        assert!(p.validate().is_err());
        let mut p = hash_plan();
        p.methods.clear();
        assert!(p.validate().is_err());
        let mut p = hash_plan();
        p.target = p.draft.clone();
        assert!(p.validate().is_err());
        let mut p = hash_plan();
        p.prompts = vec![Prompt::Text("nope".into())];
        assert!(matches!(p.build_models(), Err(Error::InvalidConfig(_))));
        let mut p = hash_plan();
        p.draft = ModelSpec::Hash {
            vocab_size: 10,
            context_window: 1,
            eos_bias: 0.0,
            seed: None,
        };
        assert!(matches!(p.build_models(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn plan_round_trips_through_json() {
        let p = hash_plan();
        let s = serde_json::to_string(&p).unwrap();
        let back: ExperimentPlan = serde_json::from_str(&s).unwrap();
        assert_eq!(p, back);
    }
}

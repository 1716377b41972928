//! Greedy decoding with draft-model lookahead and stairs-batched validation.
//!
//! The crate is organised bottom-up:
//!
//! * [`lm`]: token types, the [`LanguageModel`] interface and three
//!   deterministic reference models.
//! * [`decode`]: plain greedy, sequential assisted and stairs assisted
//!   generation, all producing the target model's greedy output.
//! * [`metrics`]: BLEU and timing statistics.
//! * [`bench`]: batch-size sweeps, method comparisons and report writers.

pub mod bench;
pub mod decode;
pub mod error;
pub mod lm;
pub mod metrics;

pub use decode::{
    build_stairs_batch, draft_propose, greedy_generate, sequential_assisted_generate,
    stairs_generate, stairs_validate, GenConfig, GenerationTrace, Method, StairsBatch,
    ValidationResult,
};
pub use error::{Error, Result};
pub use lm::{
    argmax_token, AgreementDraft, HashLM, LanguageModel, Logits, NGramLM, TokenId, TokenSeq,
    TokenizerMode, Vocabulary,
};

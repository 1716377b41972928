//! Shared fixtures for the criterion benchmarks in `benches/`.

use std::sync::Arc;

use stairs_core::{AgreementDraft, HashLM, LanguageModel, TokenSeq};

/// A hash target over `vocab_size` tokens and an agreement draft wrapping it.
pub fn model_pair(
    vocab_size: usize,
    agreement: f64,
) -> (Arc<dyn LanguageModel>, Arc<dyn LanguageModel>) {
    let target: Arc<dyn LanguageModel> =
        Arc::new(HashLM::with_size(vocab_size, 7, 4, 0.0).expect("valid hash model"));
    let draft: Arc<dyn LanguageModel> =
        Arc::new(AgreementDraft::new(target.clone(), agreement, 8).expect("valid draft"));
    (target, draft)
}

pub fn prompt() -> TokenSeq {
    TokenSeq::from_ids([3, 1, 4, 1, 5])
}

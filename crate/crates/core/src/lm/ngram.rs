use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{LanguageModel, Logits, TokenId, TokenSeq, Vocabulary, EOS_TOKEN, PAD_TOKEN};
use crate::error::{Error, Result};

pub const DEFAULT_SMOOTHING: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizerMode {
    Whitespace,
    Byte,
}

impl TokenizerMode {
    pub fn tokenize(self, line: &str) -> Vec<String> {
        match self {
            TokenizerMode::Whitespace => line.split_whitespace().map(str::to_string).collect(),
            TokenizerMode::Byte => line.bytes().map(byte_token).collect(),
        }
    }
}

impl std::str::FromStr for TokenizerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "whitespace" => Ok(TokenizerMode::Whitespace),
            "byte" => Ok(TokenizerMode::Byte),
            other => Err(Error::InvalidConfig(format!(
                "unknown tokenizer mode {other:?} (expected whitespace or byte)"
            ))),
        }
    }
}

/// Tokenizes `text` and looks every token up in `vocab`.
pub fn encode_text(vocab: &Vocabulary, mode: TokenizerMode, text: &str) -> Result<TokenSeq> {
    mode.tokenize(text)
        .iter()
        .map(|t| {
            vocab
                .id_of(t)
                .ok_or_else(|| Error::InvalidInput(format!("token {t:?} not in vocabulary")))
        })
        .collect()
}

fn byte_token(b: u8) -> String {
    if b.is_ascii_graphic() || b == b' ' {
        (b as char).to_string()
    } else {
        format!("<0x{b:02X}>")
    }
}

/// Count-based n-gram model with add-constant smoothing and back-off to
/// shorter contexts.
///
/// Each non-empty corpus line is one training sequence terminated by EOS;
/// contexts never span lines.
#[derive(Debug, Clone)]
pub struct NGramLM {
    vocab: Vocabulary,
    order: usize,
    smoothing: f64,
    tokenizer: TokenizerMode,
    // counts[len] maps a context of exactly `len` tokens to successor counts.
    counts: Vec<HashMap<Vec<TokenId>, Vec<u32>>>,
    name: String,
}

/// Builds an n-gram model from raw text.
pub fn train_ngram(corpus: &str, order: usize, tokenizer: TokenizerMode) -> Result<NGramLM> {
    NGramLM::train(corpus, order, tokenizer, DEFAULT_SMOOTHING)
}

impl NGramLM {
    pub fn train(
        corpus: &str,
        order: usize,
        tokenizer: TokenizerMode,
        smoothing: f64,
    ) -> Result<Self> {
        if order < 1 {
            return Err(Error::InvalidConfig(
                "n-gram order must be at least 1".into(),
            ));
        }
        if !(smoothing.is_finite() && smoothing > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "smoothing constant must be positive, got {smoothing}"
            )));
        }

        let lines: Vec<Vec<String>> = corpus
            .lines()
            .map(|l| tokenizer.tokenize(l))
            .filter(|t| !t.is_empty())
            .collect();
        if lines.is_empty() {
            return Err(Error::Ingestion("corpus contains no tokens".into()));
        }

        let mut index: HashMap<&str, TokenId> = HashMap::new();
        let mut tokens: Vec<String> = Vec::new();
        for tok in lines.iter().flatten() {
            if tok == EOS_TOKEN || tok == PAD_TOKEN {
                return Err(Error::Ingestion(format!(
                    "corpus contains reserved token {tok}"
                )));
            }
            if !index.contains_key(tok.as_str()) {
                index.insert(tok.as_str(), TokenId(tokens.len() as u32));
                tokens.push(tok.clone());
            }
        }
        let eos = TokenId(tokens.len() as u32);
        let pad = TokenId(tokens.len() as u32 + 1);
        tokens.push(EOS_TOKEN.to_string());
        tokens.push(PAD_TOKEN.to_string());
        let vocab_len = tokens.len();

        let sequences: Vec<Vec<TokenId>> = lines
            .iter()
            .map(|l| {
                l.iter()
                    .map(|t| index[t.as_str()])
                    .chain(std::iter::once(eos))
                    .collect()
            })
            .collect();

        let mut counts: Vec<HashMap<Vec<TokenId>, Vec<u32>>> = vec![HashMap::new(); order];
        for seq in &sequences {
            for (i, &next) in seq.iter().enumerate() {
                for len in 0..=i.min(order - 1) {
                    let ctx = seq[i - len..i].to_vec();
                    counts[len].entry(ctx).or_insert_with(|| vec![0; vocab_len])[next.index()] += 1;
                }
            }
        }

        let vocab = Vocabulary::new(tokens, eos, pad)?;
        let name = format!("ngram(order={order}, |V|={vocab_len})");
        Ok(NGramLM {
            vocab,
            order,
            smoothing,
            tokenizer,
            counts,
            name,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn tokenizer(&self) -> TokenizerMode {
        self.tokenizer
    }

    /// Tokenizes and maps text onto this model's vocabulary.
    pub fn encode(&self, text: &str) -> Result<TokenSeq> {
        encode_text(&self.vocab, self.tokenizer, text)
    }

    /// Whether this exact context was observed during training.
    pub fn has_context(&self, ctx: &[TokenId]) -> bool {
        ctx.len() < self.order && self.counts[ctx.len()].contains_key(ctx)
    }

    /// Scores `prefix` as a model of order `order` would, backing off from
    /// the longest usable context to the unigram distribution.
    pub fn score_at_order(&self, prefix: &[TokenId], order: usize) -> Logits {
        let order = order.clamp(1, self.order);
        let max_len = (order - 1).min(prefix.len());
        let row = (0..=max_len)
            .rev()
            .find_map(|len| self.counts[len].get(&prefix[prefix.len() - len..]))
            .expect("unigram counts exist for any non-empty corpus");
        let pad = self.vocab.pad_id().index();
        let scores = row
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                if i == pad {
                    0.0
                } else {
                    f64::from(c) + self.smoothing
                }
            })
            .collect();
        Logits::from_finite(scores)
    }
}

impl LanguageModel for NGramLM {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn score_unchecked(&self, prefix: &[TokenId]) -> Logits {
        self.score_at_order(prefix, self.order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::argmax_token;

    fn next_after(m: &NGramLM, words: &str) -> String {
        let p = m.encode(words).unwrap();
        let t = argmax_token(&m.score_next(&p).unwrap());
        m.vocabulary().token_str(t).unwrap().to_string()
    }

    #[test]
    fn unigram_prefers_most_frequent() {
        let m = train_ngram("a a a b", 1, TokenizerMode::Whitespace).unwrap();
        assert_eq!(next_after(&m, ""), "a");
    }

    #[test]
    fn bigram_only_successor() {
        let m = train_ngram("the dog the dog", 2, TokenizerMode::Whitespace).unwrap();
        assert_eq!(next_after(&m, "the"), "dog");
    }

    #[test]
    fn bigram_tie_goes_to_lower_id() {
        let m = train_ngram("a b a c", 2, TokenizerMode::Whitespace).unwrap();
        assert_eq!(next_after(&m, "a"), "b");
    }

    #[test]
    fn ids_follow_first_appearance_and_specials_trail() {
        let m = train_ngram("x y\nz x", 2, TokenizerMode::Whitespace).unwrap();
        let v = m.vocabulary();
        assert_eq!(v.tokens(), &["x", "y", "z", EOS_TOKEN, PAD_TOKEN]);
        assert_eq!(v.eos_id(), TokenId(3));
    }

    #[test]
    fn byte_mode_tokenizes_bytes() {
        let m = train_ngram("abab\n", 3, TokenizerMode::Byte).unwrap();
        assert_eq!(m.vocabulary().len(), 4);
        assert_eq!(next_after(&m, "ab"), "a");
        assert_eq!(
            TokenizerMode::Byte.tokenize("\té"),
            vec!["<0x09>", "<0xC3>", "<0xA9>"]
        );
    }

    #[test]
    fn unseen_context_backs_off() {
        let m = train_ngram("a b c\nb a d", 3, TokenizerMode::Whitespace).unwrap();
        let p = m.encode("c a").unwrap();
        assert!(!m.has_context(&p));
        assert!(m.score_next(&p).unwrap().bit_eq(&m.score_at_order(&p, 2)));
        // "c a" unseen, "a" seen with successors b and d (tie → b).
        assert_eq!(next_after(&m, "c a"), "b");
    }

    #[test]
    fn pad_never_wins() {
        let m = train_ngram("a", 1, TokenizerMode::Whitespace).unwrap();
        let l = m.score_next(&[]).unwrap();
        assert_eq!(l.scores()[m.vocabulary().pad_id().index()], 0.0);
    }

    #[test]
    fn ingestion_errors() {
        assert!(matches!(
            train_ngram("   \n\n", 2, TokenizerMode::Whitespace),
            Err(Error::Ingestion(_))
        ));
        assert!(matches!(
            train_ngram("a b", 0, TokenizerMode::Whitespace),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            train_ngram("a <eos> b", 2, TokenizerMode::Whitespace),
            Err(Error::Ingestion(_))
        ));
        assert!("bytes".parse::<TokenizerMode>().is_err());
    }

    #[test]
    fn encode_rejects_unknown_words() {
        let m = train_ngram("a b", 2, TokenizerMode::Whitespace).unwrap();
        assert!(m.encode("a q").is_err());
    }
}

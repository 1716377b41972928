//! Output-accuracy and timing metrics.

mod bleu;
mod timing;

pub use bleu::{bleu, bleu_with_order, BleuScore, MAX_ORDER};
pub use timing::{speedup_percent, timing_stats, TimingStats};

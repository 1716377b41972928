use serde::{Deserialize, Serialize};

use crate::decode::GenerationTrace;
use crate::error::{Error, Result};

/// Analytic forward-call costs, in seconds.
///
/// A target call over `r` rows costs `target_base + target_per_row * (r - 1)`:
/// extra rows in a batch are cheap compared with a fresh call. Every draft
/// call costs `draft_per_call`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub target_base: f64,
    pub target_per_row: f64,
    pub draft_per_call: f64,
}

impl LatencyModel {
    pub fn new(target_base: f64, target_per_row: f64, draft_per_call: f64) -> Result<Self> {
        let lat = LatencyModel {
            target_base,
            target_per_row,
            draft_per_call,
        };
        lat.validate()?;
        Ok(lat)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("target_base", self.target_base),
            ("target_per_row", self.target_per_row),
            ("draft_per_call", self.draft_per_call),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "latency parameter {name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if self.target_per_row > self.target_base {
            return Err(Error::InvalidConfig(format!(
                "target_per_row ({}) must not exceed target_base ({})",
                self.target_per_row, self.target_base
            )));
        }
        Ok(())
    }

    /// Cost of one target call over `rows` rows.
    pub fn target_call(&self, rows: usize) -> f64 {
        self.target_base + self.target_per_row * rows.saturating_sub(1) as f64
    }
}

/// Simulated wall time of a generation under `lat`.
pub fn simulate_time(trace: &GenerationTrace, lat: &LatencyModel) -> Result<f64> {
    lat.validate()?;
    let batched: f64 = trace
        .batch_call_rows()
        .map(|rows| lat.target_call(rows))
        .sum();
    let t = &trace.totals;
    Ok(batched
        + t.target_single_calls as f64 * lat.target_base
        + t.draft_calls as f64 * lat.draft_per_call)
}

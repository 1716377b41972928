use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Descriptive statistics over repeated timings, in seconds.
///
/// Percentiles use the nearest-rank method: the p-th percentile is the
/// sample at rank `ceil(p/100 * n)` of the sorted samples. `std` is the
/// population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub std: f64,
    pub p5: f64,
    pub p25: f64,
    pub p75: f64,
    pub p95: f64,
}

fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

pub fn timing_stats(samples: &[f64]) -> Result<TimingStats> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("no timing samples".into()));
    }
    if let Some(bad) = samples.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite timing sample {bad}"
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let var = sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    Ok(TimingStats {
        n,
        // Rounding can push the mean of identical samples off by an ulp.
        mean: mean.clamp(sorted[0], sorted[n - 1]),
        median,
        min: sorted[0],
        max: sorted[n - 1],
        std: var.sqrt(),
        p5: nearest_rank(&sorted, 5.0),
        p25: nearest_rank(&sorted, 25.0),
        p75: nearest_rank(&sorted, 75.0),
        p95: nearest_rank(&sorted, 95.0),
    })
}

/// Percent reduction of `variant` relative to `baseline`; negative when the
/// variant is slower.
pub fn speedup_percent(baseline_mean: f64, variant_mean: f64) -> Result<f64> {
    if !(baseline_mean > 0.0 && variant_mean > 0.0) {
        return Err(Error::InvalidInput(format!(
            "speedup needs positive means, got baseline={baseline_mean} variant={variant_mean}"
        )));
    }
    Ok(100.0 * (baseline_mean - variant_mean) / baseline_mean)
}

use rand::Rng;
use rayon::prelude::*;

use super::{Result, StatsError};
use crate::seed::{role, Seed};

pub const DEFAULT_RESAMPLES: usize = 5000;
pub const DEFAULT_LEVEL: f64 = 0.95;

// Resamples drawn per seeded block; blocks run in parallel and are merged
// in block order.
const BLOCK: usize = 250;

/// Percentile bootstrap interval for a mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalEstimate {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub resamples: usize,
}

fn mean(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    values.sum::<f64>() / n as f64
}

/// Linear-interpolation quantile of sorted data (Hyndman–Fan type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile bootstrap confidence interval of the mean of `values`.
/// `resamples` means of size-n resamples (with replacement) are drawn and
/// the interval runs between their `(1-level)/2` and `1-(1-level)/2`
/// quantiles.
pub fn bootstrap_ci_mean(values: &[f64], resamples: usize, level: f64, seed: Seed) -> Result<IntervalEstimate> {
    if values.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::InvalidLevel(level));
    }
    if resamples == 0 {
        return Err(StatsError::NoResamples);
    }
    let n = values.len();
    let blocks = resamples.div_ceil(BLOCK);
    let mut means: Vec<f64> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = seed.child(role::BOOTSTRAP).child(b as u64).rng();
            let count = BLOCK.min(resamples - b * BLOCK);
            (0..count)
                .map(|_| mean((0..n).map(|_| values[rng.random_range(0..n)]), n))
                .collect::<Vec<_>>()
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let alpha = 1.0 - level;
    Ok(IntervalEstimate {
        mean: mean(values.iter().copied(), n),
        lower: quantile_sorted(&means, alpha / 2.0),
        upper: quantile_sorted(&means, 1.0 - alpha / 2.0),
        level,
        resamples,
    })
}

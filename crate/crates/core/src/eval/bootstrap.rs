//! Paired bootstrap significance over target accuracy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bench::BenchItem;
use crate::error::{Error, Result};

use super::PredictionRecord;

/// Outcome of a paired bootstrap comparison of two systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub resamples: usize,
    pub seed: u64,
    /// Observed target-accuracy difference A − B on the full item set.
    pub observed_delta: f64,
    /// Two-sided p-value: the fraction of resampled deltas with sign opposite
    /// to (or zero relative to) the observed delta, doubled and clamped.
    pub p_value: f64,
    /// 2.5th percentile of the resampled delta distribution.
    pub ci_low: f64,
    /// 97.5th percentile of the resampled delta distribution.
    pub ci_high: f64,
}

/// Each resample draws its own generator from `(seed, resample index)`, so
/// batches can run anywhere and still reproduce bit-identically.
fn resample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&(index + 1).to_le_bytes());
    ChaCha8Rng::from_seed(bytes)
}

/// Resamples items with replacement `resamples` times; each resample yields a
/// target-accuracy difference Δ = A − B. Fully determined by `seed`.
pub fn paired_bootstrap(
    items: &[BenchItem],
    preds_a: &[PredictionRecord],
    preds_b: &[PredictionRecord],
    resamples: usize,
    seed: u64,
) -> Result<BootstrapResult> {
    if items.is_empty() {
        return Err(Error::domain("bootstrap over zero items"));
    }
    if resamples == 0 {
        return Err(Error::domain("resamples must be at least 1"));
    }
    let aligned_a = super::align(items, preds_a)?;
    let aligned_b = super::align(items, preds_b)?;
    let correct_a: Vec<u8> = aligned_a
        .iter()
        .map(|(item, pred)| u8::from(super::target_correct(item, pred)))
        .collect();
    let correct_b: Vec<u8> = aligned_b
        .iter()
        .map(|(item, pred)| u8::from(super::target_correct(item, pred)))
        .collect();

    let n = items.len();
    let observed_delta = (correct_a.iter().map(|&c| c as i64).sum::<i64>()
        - correct_b.iter().map(|&c| c as i64).sum::<i64>()) as f64
        / n as f64;

    let mut deltas = Vec::with_capacity(resamples);
    for r in 0..resamples {
        let mut rng = resample_rng(seed, r as u64);
        let mut diff: i64 = 0;
        for _ in 0..n {
            let i = rng.random_range(0..n);
            diff += correct_a[i] as i64 - correct_b[i] as i64;
        }
        deltas.push(diff as f64 / n as f64);
    }

    let p_value = if observed_delta == 0.0 {
        1.0
    } else {
        let opposite = deltas
            .iter()
            .filter(|&&d| {
                if observed_delta > 0.0 {
                    d <= 0.0
                } else {
                    d >= 0.0
                }
            })
            .count();
        (2.0 * opposite as f64 / resamples as f64).min(1.0)
    };

    deltas.sort_by(f64::total_cmp);
    let ci_low = percentile(&deltas, 2.5);
    let ci_high = percentile(&deltas, 97.5);

    Ok(BootstrapResult {
        resamples,
        seed,
        observed_delta,
        p_value,
        ci_low,
        ci_high,
    })
}

/// Linear interpolation between closest ranks over sorted values.
fn percentile(sorted: &[f64], pct: f64) -> f64 {
    let rank = pct / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (rank - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

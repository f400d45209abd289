//! Inter-annotator agreement.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One doubly-labeled instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementSample {
    pub rater_a: String,
    pub rater_b: String,
}

/// Cohen's kappa: `(p_o − p_e) / (1 − p_e)` with observed agreement `p_o` and
/// chance agreement `p_e` from the raters' marginal label frequencies.
///
/// Returns exactly `1.0` on perfect agreement. Degenerate when both raters
/// used one identical category everywhere (`p_e = 1`), which is an error, as
/// is an empty sample list.
pub fn cohen_kappa(samples: &[AgreementSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("kappa requires at least one sample"));
    }
    let n = samples.len() as f64;
    let mut counts_a: BTreeMap<&str, usize> = BTreeMap::new();
    let mut counts_b: BTreeMap<&str, usize> = BTreeMap::new();
    let mut agree = 0usize;
    for sample in samples {
        *counts_a.entry(sample.rater_a.as_str()).or_insert(0) += 1;
        *counts_b.entry(sample.rater_b.as_str()).or_insert(0) += 1;
        if sample.rater_a == sample.rater_b {
            agree += 1;
        }
    }
    // p_e = 1 exactly iff each rater used a single category and they match.
    if counts_a.len() == 1 && counts_b.len() == 1 {
        let only_a = counts_a.keys().next().unwrap();
        let only_b = counts_b.keys().next().unwrap();
        if only_a == only_b {
            return Err(Error::DegenerateAgreement);
        }
    }
    let p_o = agree as f64 / n;
    if agree == samples.len() {
        return Ok(1.0);
    }
    let p_e: f64 = counts_a
        .iter()
        .map(|(category, &count_a)| {
            let count_b = counts_b.get(category).copied().unwrap_or(0);
            (count_a as f64 / n) * (count_b as f64 / n)
        })
        .sum();
    Ok((p_o - p_e) / (1.0 - p_e))
}

//! Binary ID-vs-OOD evaluation: threshold calibration, FPR at a fixed
//! TPR, and AUROC via the Mann-Whitney U statistic with tie
//! correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::quantile_sorted;

/// Two score distributions to separate. Higher score means more
/// in-distribution.
#[derive(Debug, Clone)]
pub struct ScoreSet {
    pub id_scores: Vec<f64>,
    pub ood_scores: Vec<f64>,
    pub label: String,
}

impl ScoreSet {
    pub fn new(id_scores: Vec<f64>, ood_scores: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if id_scores.is_empty() || ood_scores.is_empty() {
            return Err(Error::InvalidInput(
                "both ID and OOD score sets must be nonempty".into(),
            ));
        }
        if id_scores
            .iter()
            .chain(&ood_scores)
            .any(|x| !x.is_finite())
        {
            return Err(Error::InvalidInput("non-finite score".into()));
        }
        Ok(ScoreSet {
            id_scores,
            ood_scores,
            label: label.into(),
        })
    }
}

/// Evaluation metrics for one score set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub fpr95: f64,
    pub auroc: f64,
    /// The ID-calibrated decision threshold.
    pub gamma: f64,
    pub n_id: usize,
    pub n_ood: usize,
}

/// Threshold gamma so that a fraction `tpr` of ID scores sit at or
/// above it: the `(1 - tpr)` type-7 quantile of the ID scores.
pub fn calibrate_gamma(id_scores: &[f64], tpr: f64) -> Result<f64> {
    if id_scores.is_empty() {
        return Err(Error::InvalidInput("empty ID score list".into()));
    }
    if !(tpr > 0.0 && tpr < 1.0) {
        return Err(Error::InvalidInput(format!(
            "tpr must be in (0, 1), got {tpr}"
        )));
    }
    let mut sorted = id_scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(quantile_sorted(&sorted, 1.0 - tpr))
}

/// Fraction of OOD scores at or above the calibrated threshold.
/// Equality counts as a false positive (the boundary is conservative).
pub fn fpr_at_tpr(s: &ScoreSet, tpr: f64) -> Result<f64> {
    let gamma = calibrate_gamma(&s.id_scores, tpr)?;
    let fp = s.ood_scores.iter().filter(|&&x| x >= gamma).count();
    Ok(fp as f64 / s.ood_scores.len() as f64)
}

/// Probability that a random ID score exceeds a random OOD score,
/// ties counting one half. O(n log n) by joint ranking.
pub fn auroc(s: &ScoreSet) -> Result<f64> {
    let n_id = s.id_scores.len();
    let n_ood = s.ood_scores.len();
    let mut all: Vec<(f64, bool)> = s
        .id_scores
        .iter()
        .map(|&x| (x, true))
        .chain(s.ood_scores.iter().map(|&x| (x, false)))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    // Rank sum of the ID scores with average ranks on ties.
    let mut rank_sum_id = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for item in &all[i..=j] {
            if item.1 {
                rank_sum_id += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_id - (n_id * (n_id + 1)) as f64 / 2.0;
    Ok(u / (n_id as f64 * n_ood as f64))
}

/// FPR95, AUROC, gamma, and counts in one report.
pub fn evaluate(s: &ScoreSet) -> Result<EvalReport> {
    let tpr = 0.95;
    Ok(EvalReport {
        fpr95: fpr_at_tpr(s, tpr)?,
        auroc: auroc(s)?,
        gamma: calibrate_gamma(&s.id_scores, tpr)?,
        n_id: s.id_scores.len(),
        n_ood: s.ood_scores.len(),
    })
}

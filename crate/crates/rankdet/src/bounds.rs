//! Closed-form score upper bounds. These are diagnostic outputs: they
//! explain score behavior through the dominant singular value but are
//! never used to gate scoring.
//!
//! All matrix infinity norms here are the induced norm (max absolute
//! row sum); for the scaled all-ones pooling vector `m` this gives
//! `||W m||_inf = ||W||_inf / HW`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::svd;
use crate::pipeline::{forward_head, ClassifierHead, FeatureMatrix, LinearLayer};
use crate::scoring::{energy_score, rankfeat_score, react_score, Rank1Method, ReActConfig};

/// A score upper bound with the score it bounds and the named terms
/// that built it.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub bound: f64,
    pub score: f64,
    /// `bound - score`; nonnegative whenever the bound's
    /// preconditions hold.
    pub slack: f64,
    pub components: BTreeMap<&'static str, f64>,
}

impl BoundReport {
    fn new(bound: f64, score: f64, components: BTreeMap<&'static str, f64>) -> Self {
        BoundReport {
            bound,
            score,
            slack: bound - score,
            components,
        }
    }
}

fn vec_inf_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn common_terms(x: &FeatureMatrix, head: &ClassifierHead) -> Result<(f64, f64, f64, f64, f64)> {
    let (_, s, _) = svd(x.mat())?;
    let spectral_sum = s.sum();
    let s1 = s.top();
    let w_inf = head.weight().inf_norm();
    let b_inf = vec_inf_norm(head.bias());
    let log_q = (head.num_classes() as f64).ln();
    Ok((spectral_sum, s1, w_inf, b_inf, log_q))
}

/// Rank-1-removal score bound:
/// `(sum_i s_i - s_1) ||W||_inf / HW + ||b||_inf + log Q`.
pub fn rankfeat_bound(x: &FeatureMatrix, head: &ClassifierHead) -> Result<BoundReport> {
    let hw = x.spatial() as f64;
    let (spectral_sum, s1, w_inf, b_inf, log_q) = common_terms(x, head)?;
    let bound = (spectral_sum - s1) * w_inf / hw + b_inf + log_q;
    let score = match rankfeat_score(x, head, Rank1Method::ExactSvd) {
        Ok((s, _)) => s.0,
        // Zero feature: removal is a no-op, score is the bias energy.
        Err(Error::DegenerateInput(_)) => {
            energy_score(&forward_head(x, head)?)?.0
        }
        Err(e) => return Err(e),
    };
    let mut components = BTreeMap::new();
    components.insert("spectral_sum", spectral_sum);
    components.insert("s1_term", s1 * w_inf / hw);
    components.insert("weight_inf_norm", w_inf);
    components.insert("bias_inf_norm", b_inf);
    components.insert("logQ", log_q);
    Ok(BoundReport::new(bound, score, components))
}

/// Energy score bound without the rank-1 subtraction:
/// `(sum_i s_i) ||W||_inf / HW + ||b||_inf + log Q`.
pub fn energy_bound(x: &FeatureMatrix, head: &ClassifierHead) -> Result<BoundReport> {
    let hw = x.spatial() as f64;
    let (spectral_sum, s1, w_inf, b_inf, log_q) = common_terms(x, head)?;
    let bound = spectral_sum * w_inf / hw + b_inf + log_q;
    let score = energy_score(&forward_head(x, head)?)?.0;
    let mut components = BTreeMap::new();
    components.insert("spectral_sum", spectral_sum);
    components.insert("s1_term", s1 * w_inf / hw);
    components.insert("weight_inf_norm", w_inf);
    components.insert("bias_inf_norm", b_inf);
    components.insert("logQ", log_q);
    Ok(BoundReport::new(bound, score, components))
}

/// ReAct score bound: the energy bound minus the clipping term
/// `max(s_1 / sqrt(C*HW) - tau, 0) ||W||_inf / HW`.
pub fn react_bound(
    x: &FeatureMatrix,
    head: &ClassifierHead,
    cfg: &ReActConfig,
) -> Result<BoundReport> {
    if !x.is_post_activation() {
        return Err(Error::InvalidInput(
            "react bound requires a post-activation (nonnegative) feature".into(),
        ));
    }
    let hw = x.spatial() as f64;
    let c = x.channels() as f64;
    let (spectral_sum, s1, w_inf, b_inf, log_q) = common_terms(x, head)?;
    let clip_term = (s1 / (c * hw).sqrt() - cfg.tau).max(0.0) * w_inf / hw;
    let bound = spectral_sum * w_inf / hw - clip_term + b_inf + log_q;
    let score = react_score(x, head, cfg)?.0;
    let mut components = BTreeMap::new();
    components.insert("spectral_sum", spectral_sum);
    components.insert("s1_term", clip_term);
    components.insert("weight_inf_norm", w_inf);
    components.insert("bias_inf_norm", b_inf);
    components.insert("logQ", log_q);
    Ok(BoundReport::new(bound, score, components))
}

/// Bound-tightening ratio `s2 / s1` of a layer's parameter matrix.
pub fn rankweight_tighten(layer: &LinearLayer) -> Result<f64> {
    if layer.mat().is_zero() {
        return Err(Error::DegenerateInput(
            "tightening ratio of a zero layer".into(),
        ));
    }
    let (_, s, _) = svd(layer.mat())?;
    let s1 = s.values()[0];
    let s2 = if s.len() > 1 { s.values()[1] } else { 0.0 };
    Ok(s2 / s1)
}

/// Bound for the rank-1 weight-removal score through the pre-layer
/// pathway: the tightening ratio times the energy-style bound
/// `s1(M) * sum_i sigma_i(X_prev) ||W||_inf / HW + ||b||_inf + log Q`.
pub fn rankweight_bound(
    prev: &FeatureMatrix,
    layer: &LinearLayer,
    head: &ClassifierHead,
) -> Result<BoundReport> {
    let ratio = rankweight_tighten(layer)?;
    let (_, layer_s, _) = svd(layer.mat())?;
    let (_, prev_s, _) = svd(prev.mat())?;
    let hw = prev.spatial() as f64;
    let w_inf = head.weight().inf_norm();
    let b_inf = vec_inf_norm(head.bias());
    let log_q = (head.num_classes() as f64).ln();
    let energy_style = layer_s.top() * prev_s.sum() * w_inf / hw + b_inf + log_q;
    let bound = ratio * (energy_style - b_inf - log_q) + b_inf + log_q;
    let score = crate::scoring::rankweight_score(prev, layer, head)?.0;
    let mut components = BTreeMap::new();
    components.insert("spectral_sum", prev_s.sum());
    components.insert("s1_term", layer_s.top());
    components.insert("weight_inf_norm", w_inf);
    components.insert("bias_inf_norm", b_inf);
    components.insert("logQ", log_q);
    components.insert("tighten_ratio", ratio);
    Ok(BoundReport::new(bound, score, components))
}

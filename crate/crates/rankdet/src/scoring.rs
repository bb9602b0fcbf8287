//! Score functions: MSP, ODIN (temperature scaling), Energy, ReAct,
//! rank-1 feature removal, rank-1 weight removal, their combination,
//! and logit-space fusion. Higher scores mean more in-distribution.

use crate::error::{Error, Result};
use crate::linalg::{power_iteration, subtract_rank1, svd, Matrix, SingularTriplet};
use crate::pipeline::{
    forward_head, forward_head_pooled, forward_layer, ClassifierHead, FeatureMatrix, LinearLayer,
    Logits,
};

/// A single scalar score; higher means more in-distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreValue(pub f64);

/// Clipping threshold for ReAct. `f64::INFINITY` disables clipping.
#[derive(Debug, Clone, Copy)]
pub struct ReActConfig {
    pub tau: f64,
}

impl ReActConfig {
    pub fn new(tau: f64) -> Result<Self> {
        if tau < 0.0 || tau.is_nan() {
            return Err(Error::InvalidInput(format!("tau must be >= 0, got {tau}")));
        }
        Ok(ReActConfig { tau })
    }
}

/// Temperature for ODIN. Default 1000.
#[derive(Debug, Clone, Copy)]
pub struct OdinConfig {
    pub temperature: f64,
}

impl Default for OdinConfig {
    fn default() -> Self {
        OdinConfig { temperature: 1000.0 }
    }
}

impl OdinConfig {
    pub fn new(temperature: f64) -> Result<Self> {
        if !(temperature > 0.0) {
            return Err(Error::InvalidInput(format!(
                "temperature must be > 0, got {temperature}"
            )));
        }
        Ok(OdinConfig { temperature })
    }
}

/// How the dominant singular triplet is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rank1Method {
    ExactSvd,
    /// Power iteration with the given iteration budget.
    PowerIteration(usize),
}

/// Logit fusion strategies. Only the arithmetic mean is implemented;
/// the alternatives are rejected with a not-implemented error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionStrategy {
    Mean,
    MaxLogit,
    ScoreSum,
}

/// `max(v) + log sum exp(v - max(v))`; stable for |v_i| up to 1e6.
pub fn logsumexp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidInput("logsumexp of an empty vector".into()));
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    Ok(max + sum.ln())
}

/// Energy score: log-sum-exp of the logits.
pub fn energy_score(y: &Logits) -> Result<ScoreValue> {
    Ok(ScoreValue(logsumexp(y.values())?))
}

/// Maximum softmax probability, computed stably via log-sum-exp.
pub fn msp_score(y: &Logits) -> Result<ScoreValue> {
    let lse = logsumexp(y.values())?;
    let max = y.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(ScoreValue((max - lse).exp()))
}

/// MSP of temperature-scaled logits (no input perturbation).
pub fn odin_score(y: &Logits, cfg: &OdinConfig) -> Result<ScoreValue> {
    let scaled: Vec<f64> = y.values().iter().map(|v| v / cfg.temperature).collect();
    msp_score(&Logits::new(scaled)?)
}

/// Elementwise `min(X m, tau)` on the pooled vector of a
/// post-activation feature.
pub fn react_transform(x: &FeatureMatrix, cfg: &ReActConfig) -> Result<Vec<f64>> {
    if !x.is_post_activation() {
        return Err(Error::InvalidInput(
            "react requires a post-activation (nonnegative) feature".into(),
        ));
    }
    Ok(x.pooled().iter().map(|&p| p.min(cfg.tau)).collect())
}

/// Energy score of the ReAct-clipped pooled vector through the head.
pub fn react_score(
    x: &FeatureMatrix,
    head: &ClassifierHead,
    cfg: &ReActConfig,
) -> Result<ScoreValue> {
    let clipped = react_transform(x, cfg)?;
    energy_score(&forward_head_pooled(&clipped, head)?)
}

/// Calibrates tau as the given percentile (linear interpolation) of
/// all pooled-activation entries across the ID collection.
pub fn calibrate_react_tau(
    id_features: &[FeatureMatrix],
    percentile: f64,
) -> Result<ReActConfig> {
    if id_features.is_empty() {
        return Err(Error::InvalidInput(
            "react calibration needs at least one ID feature".into(),
        ));
    }
    if !(percentile > 0.0 && percentile <= 100.0) {
        return Err(Error::InvalidInput(format!(
            "percentile must be in (0, 100], got {percentile}"
        )));
    }
    let mut pooled: Vec<f64> = id_features.iter().flat_map(|x| x.pooled()).collect();
    pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ReActConfig::new(quantile_sorted(&pooled, percentile / 100.0).max(0.0))
}

/// Type-7 quantile (linear interpolation between order statistics) of
/// an ascending-sorted slice.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi.min(n - 1)] - sorted[lo])
}

/// Dominant singular triplet by the chosen method.
pub fn dominant_triplet(x: &Matrix, method: Rank1Method) -> Result<SingularTriplet> {
    match method {
        Rank1Method::ExactSvd => {
            let (u, s, v) = svd(x)?;
            SingularTriplet::new(
                s.top(),
                (0..x.rows()).map(|i| u.get(i, 0)).collect(),
                (0..x.cols()).map(|j| v.get(j, 0)).collect(),
            )
        }
        Rank1Method::PowerIteration(iters) => {
            // Run to the iteration budget; the budget is the knob.
            let r = power_iteration(x, iters, 1e-300)?;
            Ok(r.triplet)
        }
    }
}

/// Rank-1 feature removal followed by the energy score; returns the
/// perturbed logits alongside the score.
pub fn rankfeat_score(
    x: &FeatureMatrix,
    head: &ClassifierHead,
    method: Rank1Method,
) -> Result<(ScoreValue, Logits)> {
    if x.mat().is_zero() {
        return Err(Error::DegenerateInput(
            "rank-1 feature removal on a zero feature".into(),
        ));
    }
    let t = dominant_triplet(x.mat(), method)?;
    let reduced = x.with_mat(subtract_rank1(x.mat(), &t)?)?;
    let y = forward_head(&reduced, head)?;
    let score = energy_score(&y)?;
    Ok((score, y))
}

/// Rank-1-subtracted copy of a layer's parameter matrix. Computed
/// once; the pruned layer is reusable across all samples.
pub fn rankweight_prune(layer: &LinearLayer) -> Result<LinearLayer> {
    if layer.mat().is_zero() {
        return Err(Error::DegenerateInput(
            "rank-1 weight removal on a zero layer".into(),
        ));
    }
    let t = dominant_triplet(layer.mat(), Rank1Method::ExactSvd)?;
    Ok(LinearLayer::new(subtract_rank1(layer.mat(), &t)?))
}

/// Energy score of the logits produced through the pruned layer.
pub fn rankweight_score(
    prev: &FeatureMatrix,
    layer: &LinearLayer,
    head: &ClassifierHead,
) -> Result<ScoreValue> {
    let pruned = rankweight_prune(layer)?;
    let feature = forward_layer(prev, &pruned)?;
    energy_score(&forward_head(&feature, head)?)
}

/// Rank-1 removal from both the layer weights and the produced
/// feature.
pub fn rankfeat_rankweight_score(
    prev: &FeatureMatrix,
    layer: &LinearLayer,
    head: &ClassifierHead,
    method: Rank1Method,
) -> Result<(ScoreValue, Logits)> {
    let pruned = rankweight_prune(layer)?;
    let feature = forward_layer(prev, &pruned)?;
    rankfeat_score(&feature, head, method)
}

/// Log-sum-exp of the elementwise mean of two logit vectors.
pub fn fuse_logits(y_a: &Logits, y_b: &Logits) -> Result<ScoreValue> {
    fuse_logits_with(y_a, y_b, FusionStrategy::Mean)
}

pub fn fuse_logits_with(
    y_a: &Logits,
    y_b: &Logits,
    strategy: FusionStrategy,
) -> Result<ScoreValue> {
    if y_a.len() != y_b.len() {
        return Err(Error::DimensionMismatch(format!(
            "fusing logits of lengths {} and {}",
            y_a.len(),
            y_b.len()
        )));
    }
    match strategy {
        FusionStrategy::Mean => {
            let mean: Vec<f64> = y_a
                .values()
                .iter()
                .zip(y_b.values())
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            Ok(ScoreValue(logsumexp(&mean)?))
        }
        other => Err(Error::NotImplemented(format!(
            "fusion strategy {other:?}; only Mean is supported"
        ))),
    }
}

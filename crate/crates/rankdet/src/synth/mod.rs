//! Seeded synthetic data: spiked-spectrum feature generators, random
//! heads and layers, and a benchmark harness that scores generated
//! ID/OOD sides with the requested methods.
//!
//! Generators are pure functions of (config, seed). Parallel callers
//! partition the seed space as `per-sample seed = base seed + index`.

pub mod rng;

pub use rng::SplitMix64;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evalkit::ScoreSet;
use crate::linalg::{svd, Matrix};
use crate::pipeline::{forward_head, forward_layer, ClassifierHead, FeatureMatrix, LinearLayer};
use crate::scoring::{
    calibrate_react_tau, energy_score, msp_score, odin_score, rankfeat_rankweight_score,
    rankfeat_score, rankweight_prune, react_score, OdinConfig, Rank1Method,
};

/// Configuration for one side of the synthetic spiked-spectrum
/// generator.
///
/// `spike` multiplies the expected bulk top singular value
/// `bulk_scale * (sqrt(C) + sqrt(HW))`, so `spike = 0` yields a pure
/// noise bulk and larger spikes inflate the dominant singular value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub spike: f64,
    pub bulk_scale: f64,
    pub seed: u64,
    pub nonnegative: bool,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.height == 0 || self.width == 0 {
            return Err(Error::InvalidInput("C, H, W must all be >= 1".into()));
        }
        if self.spike < 0.0 {
            return Err(Error::InvalidInput(format!(
                "spike must be >= 0, got {}",
                self.spike
            )));
        }
        if !(self.bulk_scale > 0.0) {
            return Err(Error::InvalidInput(format!(
                "bulk_scale must be > 0, got {}",
                self.bulk_scale
            )));
        }
        Ok(())
    }
}

fn unit_gaussian(rng: &mut SplitMix64, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| rng.next_gaussian()).collect();
    let n = crate::linalg::norm2(&v);
    if n > 0.0 {
        for x in &mut v {
            *x /= n;
        }
    }
    v
}

/// One spiked feature: `X = spike * sigma_bar * u v^T + G` where `G`
/// has i.i.d. `N(0, bulk_scale^2)` entries, `sigma_bar` is the
/// expected bulk top singular value `bulk_scale (sqrt(C) + sqrt(HW))`,
/// `u` is a random signed unit vector and `v` a random nonnegative
/// unit vector (so the spike survives average pooling). With the
/// `nonnegative` flag, entries are clamped at zero afterwards.
pub fn gen_feature(cfg: &SynthConfig) -> Result<FeatureMatrix> {
    cfg.validate()?;
    let c = cfg.channels;
    let hw = cfg.height * cfg.width;
    let mut rng = SplitMix64::new(cfg.seed);
    let mut data: Vec<f64> = (0..c * hw)
        .map(|_| cfg.bulk_scale * rng.next_gaussian())
        .collect();
    let u = unit_gaussian(&mut rng, c);
    let mut v = unit_gaussian(&mut rng, hw);
    for x in &mut v {
        *x = x.abs();
    }
    let sigma_bar = cfg.bulk_scale * ((c as f64).sqrt() + (hw as f64).sqrt());
    let coeff = cfg.spike * sigma_bar;
    for i in 0..c {
        for j in 0..hw {
            data[i * hw + j] += coeff * u[i] * v[j];
        }
    }
    if cfg.nonnegative {
        for x in &mut data {
            *x = x.max(0.0);
        }
        FeatureMatrix::new_post_activation(c, cfg.height, cfg.width, Matrix::from_vec(c, hw, data)?)
    } else {
        FeatureMatrix::new(c, cfg.height, cfg.width, Matrix::from_vec(c, hw, data)?)
    }
}

/// The feature for sample `index`: same config, seed offset by the
/// index.
pub fn gen_feature_indexed(cfg: &SynthConfig, index: u64) -> Result<FeatureMatrix> {
    let mut sub = cfg.clone();
    sub.seed = cfg.seed.wrapping_add(index);
    gen_feature(&sub)
}

/// Random classifier head: weight entries zero-mean with scale
/// `1/sqrt(C)`, bias entries with scale 0.1.
pub fn gen_head(num_classes: usize, channels: usize, seed: u64) -> Result<ClassifierHead> {
    if num_classes < 2 {
        return Err(Error::InvalidInput(format!(
            "need Q >= 2 classes, got {num_classes}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let scale = 1.0 / (channels as f64).sqrt();
    let weight = Matrix::from_vec(
        num_classes,
        channels,
        (0..num_classes * channels)
            .map(|_| scale * rng.next_gaussian())
            .collect(),
    )?;
    let bias = (0..num_classes).map(|_| 0.1 * rng.next_gaussian()).collect();
    ClassifierHead::new(weight, bias)
}

/// Random deep layer: bulk `N(0, 1/C_prev)` entries plus a rank-1
/// spike of the given strength.
pub fn gen_layer(out_channels: usize, in_channels: usize, spike: f64, seed: u64) -> Result<LinearLayer> {
    if out_channels == 0 || in_channels == 0 {
        return Err(Error::InvalidInput("layer dims must be >= 1".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let scale = 1.0 / (in_channels as f64).sqrt();
    let mut data: Vec<f64> = (0..out_channels * in_channels)
        .map(|_| scale * rng.next_gaussian())
        .collect();
    let a = unit_gaussian(&mut rng, out_channels);
    let b = unit_gaussian(&mut rng, in_channels);
    for i in 0..out_channels {
        for j in 0..in_channels {
            data[i * in_channels + j] += spike * a[i] * b[j];
        }
    }
    Ok(LinearLayer::new(Matrix::from_vec(out_channels, in_channels, data)?))
}

/// Ratio of the top two singular values of a feature, measured after
/// any nonnegative clamping.
pub fn spike_ratio(x: &FeatureMatrix) -> Result<f64> {
    let (_, s, _) = svd(x.mat())?;
    if s.len() < 2 || s.values()[1] == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(s.values()[0] / s.values()[1])
}

/// Scoring method selector shared by the benchmark harness and the
/// CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreMethod {
    Msp,
    Odin,
    Energy,
    React,
    RankFeat,
    RankWeight,
    RankFeatRankWeight,
}

impl ScoreMethod {
    pub fn needs_layer(self) -> bool {
        matches!(self, ScoreMethod::RankWeight | ScoreMethod::RankFeatRankWeight)
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "msp" => Ok(ScoreMethod::Msp),
            "odin" => Ok(ScoreMethod::Odin),
            "energy" => Ok(ScoreMethod::Energy),
            "react" => Ok(ScoreMethod::React),
            "rankfeat" => Ok(ScoreMethod::RankFeat),
            "rankweight" => Ok(ScoreMethod::RankWeight),
            "rankfeat+rankweight" => Ok(ScoreMethod::RankFeatRankWeight),
            other => Err(Error::InvalidInput(format!("unknown method '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScoreMethod::Msp => "msp",
            ScoreMethod::Odin => "odin",
            ScoreMethod::Energy => "energy",
            ScoreMethod::React => "react",
            ScoreMethod::RankFeat => "rankfeat",
            ScoreMethod::RankWeight => "rankweight",
            ScoreMethod::RankFeatRankWeight => "rankfeat+rankweight",
        }
    }
}

/// Benchmark setup: two generator sides plus an optional shared deep
/// layer. When `layer_spike` is set, every sample is produced as
/// `X = M X_prev` through the shared layer, and the weight-pruning
/// methods prune that layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub id: SynthConfig,
    pub ood: SynthConfig,
    pub n_per_side: usize,
    pub layer_spike: Option<f64>,
    pub head_classes: usize,
    pub seed: u64,
}

/// Everything needed to reproduce one benchmark run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkManifest {
    pub config: BenchmarkConfig,
    pub methods: Vec<String>,
    pub head_seed: u64,
    pub layer_seed: Option<u64>,
}

pub struct BenchmarkResult {
    pub score_sets: Vec<(ScoreMethod, ScoreSet)>,
    pub manifest: BenchmarkManifest,
}

/// Generates `n_per_side` features per side, scores each sample with
/// every requested method, and returns one [`ScoreSet`] per method.
pub fn gen_benchmark(cfg: &BenchmarkConfig, methods: &[ScoreMethod]) -> Result<BenchmarkResult> {
    cfg.id.validate()?;
    cfg.ood.validate()?;
    if cfg.n_per_side == 0 {
        return Err(Error::InvalidInput("n_per_side must be >= 1".into()));
    }
    if cfg.id.channels != cfg.ood.channels
        || cfg.id.height != cfg.ood.height
        || cfg.id.width != cfg.ood.width
    {
        return Err(Error::DimensionMismatch(
            "ID and OOD configs must share C, H, W".into(),
        ));
    }
    let c = cfg.id.channels;
    let head_seed = cfg.seed.wrapping_mul(0x9e3779b9).wrapping_add(1);
    let head = gen_head(cfg.head_classes, c, head_seed)?;

    let layer_seed = cfg.layer_spike.map(|_| cfg.seed.wrapping_mul(0x9e3779b9).wrapping_add(2));
    let layer = match (cfg.layer_spike, layer_seed) {
        (Some(spike), Some(seed)) => Some(gen_layer(c, c, spike, seed)?),
        _ => None,
    };
    for m in methods {
        if m.needs_layer() && layer.is_none() {
            return Err(Error::InvalidInput(format!(
                "method {} needs layer_spike to be set",
                m.name()
            )));
        }
    }

    // Raw generated features per side; with a layer these are the
    // pre-layer features.
    let gen_side = |side_cfg: &SynthConfig| -> Result<Vec<FeatureMatrix>> {
        (0..cfg.n_per_side as u64)
            .map(|i| gen_feature_indexed(side_cfg, i))
            .collect()
    };
    let id_prev = gen_side(&cfg.id)?;
    let ood_prev = gen_side(&cfg.ood)?;

    let through_layer = |feats: &[FeatureMatrix]| -> Result<Vec<FeatureMatrix>> {
        match &layer {
            Some(l) => feats.iter().map(|f| forward_layer(f, l)).collect(),
            None => Ok(feats.to_vec()),
        }
    };
    let id_feats = through_layer(&id_prev)?;
    let ood_feats = through_layer(&ood_prev)?;

    // ReAct clipping features must be nonnegative; calibrate on the ID
    // side at the default 90th percentile.
    let react_cfg = if methods.contains(&ScoreMethod::React) {
        Some(calibrate_react_tau(&id_feats, 90.0)?)
    } else {
        None
    };

    let mut score_sets = Vec::new();
    for &method in methods {
        let score_one = |prev: &FeatureMatrix, feat: &FeatureMatrix| -> Result<f64> {
            Ok(match method {
                ScoreMethod::Msp => msp_score(&forward_head(feat, &head)?)?.0,
                ScoreMethod::Odin => {
                    odin_score(&forward_head(feat, &head)?, &OdinConfig::default())?.0
                }
                ScoreMethod::Energy => energy_score(&forward_head(feat, &head)?)?.0,
                ScoreMethod::React => {
                    react_score(feat, &head, react_cfg.as_ref().unwrap())?.0
                }
                ScoreMethod::RankFeat => rankfeat_score(feat, &head, Rank1Method::ExactSvd)?.0 .0,
                ScoreMethod::RankWeight => {
                    crate::scoring::rankweight_score(prev, layer.as_ref().unwrap(), &head)?.0
                }
                ScoreMethod::RankFeatRankWeight => {
                    rankfeat_rankweight_score(
                        prev,
                        layer.as_ref().unwrap(),
                        &head,
                        Rank1Method::ExactSvd,
                    )?
                    .0
                     .0
                }
            })
        };
        let id_scores: Vec<f64> = id_prev
            .iter()
            .zip(&id_feats)
            .map(|(p, f)| score_one(p, f))
            .collect::<Result<_>>()?;
        let ood_scores: Vec<f64> = ood_prev
            .iter()
            .zip(&ood_feats)
            .map(|(p, f)| score_one(p, f))
            .collect::<Result<_>>()?;
        score_sets.push((
            method,
            ScoreSet::new(id_scores, ood_scores, method.name())?,
        ));
    }

    Ok(BenchmarkResult {
        score_sets,
        manifest: BenchmarkManifest {
            config: cfg.clone(),
            methods: methods.iter().map(|m| m.name().to_string()).collect(),
            head_seed,
            layer_seed,
        },
    })
}

/// Convenience: prune the benchmark layer once outside the harness.
pub fn pruned_layer(layer: &LinearLayer) -> Result<LinearLayer> {
    rankweight_prune(layer)
}

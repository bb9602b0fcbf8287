//! The minimal inference pipeline the scores operate on: a reshaped
//! feature matrix is pooled by global average pooling and mapped by a
//! linear classifier head to logits; an optional preceding linear
//! layer models the deep layer that rank-1 weight removal prunes.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Reshaped high-level feature map of shape `C x (H*W)`.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    channels: usize,
    height: usize,
    width: usize,
    post_activation: bool,
    mat: Matrix,
}

impl FeatureMatrix {
    pub fn new(channels: usize, height: usize, width: usize, mat: Matrix) -> Result<Self> {
        Self::build(channels, height, width, mat, false)
    }

    /// Marks the feature as the output of a ReLU-like activation;
    /// entries must be nonnegative.
    pub fn new_post_activation(
        channels: usize,
        height: usize,
        width: usize,
        mat: Matrix,
    ) -> Result<Self> {
        Self::build(channels, height, width, mat, true)
    }

    fn build(
        channels: usize,
        height: usize,
        width: usize,
        mat: Matrix,
        post_activation: bool,
    ) -> Result<Self> {
        if mat.rows() != channels || mat.cols() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "feature matrix is {}x{}, expected {}x{}",
                mat.rows(),
                mat.cols(),
                channels,
                height * width
            )));
        }
        if post_activation && mat.data().iter().any(|&x| x < 0.0) {
            return Err(Error::InvalidInput(
                "post-activation feature has negative entries".into(),
            ));
        }
        Ok(FeatureMatrix {
            channels,
            height,
            width,
            post_activation,
            mat,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn spatial(&self) -> usize {
        self.height * self.width
    }

    pub fn is_post_activation(&self) -> bool {
        self.post_activation
    }

    pub fn mat(&self) -> &Matrix {
        &self.mat
    }

    /// Same spatial metadata, new matrix contents.
    pub fn with_mat(&self, mat: Matrix) -> Result<Self> {
        Self::build(self.channels, self.height, self.width, mat, false)
    }

    /// Pooled vector `X * m`, length `C`.
    pub fn pooled(&self) -> Vec<f64> {
        let m = gap_vector(self.height, self.width);
        self.mat.matvec(&m).expect("gap vector length matches")
    }
}

/// Final linear map producing `Q` logits from a pooled feature.
#[derive(Debug, Clone)]
pub struct ClassifierHead {
    weight: Matrix,
    bias: Vec<f64>,
}

impl ClassifierHead {
    pub fn new(weight: Matrix, bias: Vec<f64>) -> Result<Self> {
        if weight.rows() < 2 {
            return Err(Error::InvalidInput(format!(
                "classifier head needs Q >= 2 classes, got {}",
                weight.rows()
            )));
        }
        if bias.len() != weight.rows() {
            return Err(Error::DimensionMismatch(format!(
                "bias length {} does not match Q = {}",
                bias.len(),
                weight.rows()
            )));
        }
        if bias.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite bias entry".into()));
        }
        Ok(ClassifierHead { weight, bias })
    }

    pub fn num_classes(&self) -> usize {
        self.weight.rows()
    }

    pub fn in_channels(&self) -> usize {
        self.weight.cols()
    }

    pub fn weight(&self) -> &Matrix {
        &self.weight
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }
}

/// Parameter matrix of a deep linear layer, `C x C_prev`.
#[derive(Debug, Clone)]
pub struct LinearLayer {
    mat: Matrix,
}

impl LinearLayer {
    pub fn new(mat: Matrix) -> Self {
        LinearLayer { mat }
    }

    pub fn mat(&self) -> &Matrix {
        &self.mat
    }

    pub fn out_channels(&self) -> usize {
        self.mat.rows()
    }

    pub fn in_channels(&self) -> usize {
        self.mat.cols()
    }
}

/// Vector of `Q` logits.
#[derive(Debug, Clone, PartialEq)]
pub struct Logits {
    values: Vec<f64>,
}

impl Logits {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite logit".into()));
        }
        Ok(Logits { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Global-average-pooling vector `m`: length `H*W`, every entry
/// `1/(H*W)`.
pub fn gap_vector(height: usize, width: usize) -> Vec<f64> {
    let hw = height * width;
    assert!(hw >= 1, "gap_vector needs H*W >= 1");
    vec![1.0 / hw as f64; hw]
}

/// Logits `W * (X * m) + b`.
pub fn forward_head(x: &FeatureMatrix, head: &ClassifierHead) -> Result<Logits> {
    if head.in_channels() != x.channels() {
        return Err(Error::DimensionMismatch(format!(
            "head expects {} channels, feature has {}",
            head.in_channels(),
            x.channels()
        )));
    }
    let pooled = x.pooled();
    let mut y = head.weight.matvec(&pooled)?;
    for (yi, bi) in y.iter_mut().zip(&head.bias) {
        *yi += bi;
    }
    Logits::new(y)
}

/// Logits from an externally pooled (and possibly clipped) vector.
pub fn forward_head_pooled(pooled: &[f64], head: &ClassifierHead) -> Result<Logits> {
    if pooled.len() != head.in_channels() {
        return Err(Error::DimensionMismatch(format!(
            "head expects {} channels, pooled vector has {}",
            head.in_channels(),
            pooled.len()
        )));
    }
    let mut y = head.weight.matvec(pooled)?;
    for (yi, bi) in y.iter_mut().zip(&head.bias) {
        *yi += bi;
    }
    Logits::new(y)
}

/// Next feature `M * X_prev`, preserving the spatial dims.
pub fn forward_layer(prev: &FeatureMatrix, layer: &LinearLayer) -> Result<FeatureMatrix> {
    if layer.in_channels() != prev.channels() {
        return Err(Error::DimensionMismatch(format!(
            "layer expects {} channels, feature has {}",
            layer.in_channels(),
            prev.channels()
        )));
    }
    let mat = layer.mat.matmul(prev.mat())?;
    FeatureMatrix::new(layer.out_channels(), prev.height(), prev.width(), mat)
}

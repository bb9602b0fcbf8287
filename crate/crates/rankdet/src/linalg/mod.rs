//! Dense matrices and the spectral primitives the scoring pipeline is
//! built on: full SVD, power iteration for the dominant singular
//! triplet, and rank-k subtraction.
//!
//! All arithmetic is `f64`; 32-bit input is promoted on load. Every
//! operation here is a pure function of immutable inputs.

mod power;
mod svd;

pub use power::{power_iteration, power_iteration_from, PiStart, PowerIterationResult};
pub use svd::svd;

use crate::error::{Error, Result};

/// Dense real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data, rejecting empty shapes and
    /// non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix shape {rows}x{cols} must have rows >= 1 and cols >= 1"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry {} at flat index {pos}",
                data[pos]
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// All-zeros matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1);
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Square diagonal matrix from the given entries.
    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m.data[i * n + i] = e;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Rank-1 matrix `s * u * v^T`.
    pub fn rank1(s: f64, u: &[f64], v: &[f64]) -> Self {
        Matrix::from_fn(u.len(), v.len(), |i, j| s * u[i] * v[j])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scale(&self, a: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| a * x).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other)?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other)?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    fn check_same_shape(&self, other: &Matrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    /// `self * x` for a column vector `x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "matvec: matrix is {}x{}, vector has length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .collect())
    }

    /// `x^T * self` for a column vector `x`, returned as a plain vector.
    pub fn vecmat(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "vecmat: matrix is {}x{}, vector has length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += xi * a;
            }
        }
        Ok(out)
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "matmul: {}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Induced infinity norm: max absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }
}

/// Dominant (or any) singular value together with its unit left/right
/// singular vectors.
///
/// Sign convention: the first component of `u` with absolute value
/// above 1e-12 is nonnegative, so triplets from different solvers are
/// directly comparable.
#[derive(Debug, Clone)]
pub struct SingularTriplet {
    pub s: f64,
    /// Left singular vector, length `rows`.
    pub u: Vec<f64>,
    /// Right singular vector, length `cols`.
    pub v: Vec<f64>,
}

impl SingularTriplet {
    pub fn new(s: f64, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if s < 0.0 {
            return Err(Error::InvalidInput(format!("negative singular value {s}")));
        }
        for (name, vec) in [("u", &u), ("v", &v)] {
            let norm = norm2(vec);
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidInput(format!(
                    "{name} is not a unit vector (norm {norm})"
                )));
            }
        }
        let mut t = SingularTriplet { s, u, v };
        t.canonicalize_sign();
        Ok(t)
    }

    /// Enforces the sign convention by flipping `u` and `v` together.
    pub fn canonicalize_sign(&mut self) {
        if let Some(&first) = self.u.iter().find(|x| x.abs() > 1e-12) {
            if first < 0.0 {
                for x in &mut self.u {
                    *x = -*x;
                }
                for x in &mut self.v {
                    *x = -*x;
                }
            }
        }
    }
}

/// Nonincreasing nonnegative singular (or eigen) values.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for w in values.windows(2) {
            if w[1] > w[0] {
                return Err(Error::InvalidInput(format!(
                    "spectrum not nonincreasing: {} followed by {}",
                    w[0], w[1]
                )));
            }
        }
        if values.last().is_some_and(|&x| x < 0.0) {
            return Err(Error::InvalidInput("negative spectrum entry".into()));
        }
        Ok(Spectrum { values })
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

    /// Sum of all values.
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Largest value, 0 for an empty spectrum.
    pub fn top(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

/// `X - s * u * v^T`, leaving `X` untouched.
pub fn subtract_rank1(x: &Matrix, t: &SingularTriplet) -> Result<Matrix> {
    if t.u.len() != x.rows() || t.v.len() != x.cols() {
        return Err(Error::DimensionMismatch(format!(
            "triplet ({}, {}) does not match matrix {}x{}",
            t.u.len(),
            t.v.len(),
            x.rows(),
            x.cols()
        )));
    }
    Ok(Matrix::from_fn(x.rows(), x.cols(), |i, j| {
        x.get(i, j) - t.s * t.u[i] * t.v[j]
    }))
}

/// Removes the top-n singular components via a full SVD.
pub fn subtract_rank_n(x: &Matrix, n: usize) -> Result<Matrix> {
    let r = x.rows().min(x.cols());
    if n < 1 || n > r {
        return Err(Error::InvalidInput(format!(
            "rank-n removal needs 1 <= n <= {r}, got {n}"
        )));
    }
    let (u, s, v) = svd(x)?;
    let mut out = x.clone();
    for k in 0..n {
        let sk = s.values()[k];
        for i in 0..x.rows() {
            for j in 0..x.cols() {
                let val = out.get(i, j) - sk * u.get(i, k) * v.get(j, k);
                out.set(i, j, val);
            }
        }
    }
    Ok(out)
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

//! Random-matrix diagnostics: Marchenko-Pastur density fitting, KL
//! divergence between empirical eigenvalue histograms and the fitted
//! density, explained-variance ratios, and spectrum summaries.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{svd, Matrix, Spectrum};

/// Fitted Marchenko-Pastur parameters for a `t x n` matrix.
///
/// Support edges follow the closed forms
/// `lambda_minus = sigma2 (1 - sqrt(n/t))^2`,
/// `lambda_plus  = sigma2 (1 + sqrt(n/t))^2`.
#[derive(Debug, Clone, Copy)]
pub struct MPFit {
    pub sigma2: f64,
    pub t: usize,
    pub n: usize,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
}

impl MPFit {
    pub fn new(sigma2: f64, t: usize, n: usize) -> Result<Self> {
        if !(sigma2 > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sigma2 must be > 0, got {sigma2}"
            )));
        }
        if t == 0 || n == 0 {
            return Err(Error::InvalidInput("t and n must be >= 1".into()));
        }
        let ratio = (n as f64 / t as f64).sqrt();
        Ok(MPFit {
            sigma2,
            t,
            n,
            lambda_minus: sigma2 * (1.0 - ratio) * (1.0 - ratio),
            lambda_plus: sigma2 * (1.0 + ratio) * (1.0 + ratio),
        })
    }
}

/// KL divergence of an empirical eigenvalue histogram against a fitted
/// MP reference, in nats.
#[derive(Debug, Clone, Copy)]
pub struct HistogramKL {
    pub bins: usize,
    pub kl: f64,
    pub epsilon: f64,
}

/// Eigenvalues of the sample covariance `(1/n) X X^T`, nonincreasing,
/// clamped to be nonnegative.
pub fn sample_covariance_eigs(x: &Matrix) -> Result<Spectrum> {
    let t = x.rows();
    let n = x.cols();
    let dm = DMatrix::from_row_slice(t, n, x.data());
    let cov = (&dm * dm.transpose()) / n as f64;
    let eig = cov.symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Spectrum::new(vals)
}

/// MP density `rho(lambda) = (t/n) sqrt((l+ - l)(l - l-)) / (2 pi l sigma2)`
/// on the support `[lambda_minus, lambda_plus]`, zero outside.
pub fn mp_density(lambda: f64, fit: &MPFit) -> f64 {
    if lambda <= 0.0 || lambda < fit.lambda_minus || lambda > fit.lambda_plus {
        return 0.0;
    }
    let num = ((fit.lambda_plus - lambda) * (lambda - fit.lambda_minus)).max(0.0).sqrt();
    (fit.t as f64 / fit.n as f64) * num / (2.0 * std::f64::consts::PI * lambda * fit.sigma2)
}

/// First-moment fit: under the `(1/n) X X^T` convention the MP mean is
/// `sigma2`, so `sigma2` is estimated as the mean eigenvalue.
pub fn fit_mp(eigs: &Spectrum, t: usize, n: usize) -> Result<MPFit> {
    if eigs.is_empty() {
        return Err(Error::InvalidInput("empty eigenvalue list".into()));
    }
    let mean = eigs.sum() / eigs.len() as f64;
    if mean <= 0.0 {
        return Err(Error::DegenerateInput(
            "all-zero eigenvalues cannot be fitted".into(),
        ));
    }
    MPFit::new(mean, t, n)
}

/// Adaptive Simpson quadrature.
pub(crate) fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }
    if a >= b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 40)
}

/// MP probability mass on an interval, by quadrature of the density.
pub fn mp_mass(fit: &MPFit, lo: f64, hi: f64) -> f64 {
    let a = lo.max(fit.lambda_minus).max(0.0);
    let b = hi.min(fit.lambda_plus);
    if b <= a {
        return 0.0;
    }
    adaptive_simpson(&|l| mp_density(l, fit), a, b, 1e-10)
}

/// Histograms the eigenvalues over `[0, max(lambda_plus, max eig)]`
/// and computes `KL(empirical || MP)` with epsilon smoothing; both
/// sides are renormalized after smoothing, so the result is
/// nonnegative.
pub fn kl_to_mp(eigs: &Spectrum, fit: &MPFit, bins: usize, epsilon: f64) -> Result<HistogramKL> {
    if bins < 2 {
        return Err(Error::InvalidInput(format!("bins must be >= 2, got {bins}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!(
            "epsilon must be > 0, got {epsilon}"
        )));
    }
    if eigs.is_empty() {
        return Err(Error::InvalidInput("empty eigenvalue list".into()));
    }
    let top = fit
        .lambda_plus
        .max(eigs.values().iter().cloned().fold(0.0, f64::max));
    if top <= 0.0 {
        return Err(Error::DegenerateInput("all-zero eigenvalues".into()));
    }
    let width = top / bins as f64;

    let mut p = vec![0.0f64; bins];
    for &l in eigs.values() {
        let idx = ((l / width) as usize).min(bins - 1);
        p[idx] += 1.0;
    }
    let mut q = vec![0.0f64; bins];
    for (i, qi) in q.iter_mut().enumerate() {
        *qi = mp_mass(fit, i as f64 * width, (i + 1) as f64 * width);
    }

    for v in p.iter_mut().chain(q.iter_mut()) {
        *v += epsilon;
    }
    let psum: f64 = p.iter().sum();
    let qsum: f64 = q.iter().sum();
    let kl: f64 = p
        .iter()
        .zip(&q)
        .map(|(&pi, &qi)| {
            let pn = pi / psum;
            let qn = qi / qsum;
            pn * (pn / qn).ln()
        })
        .sum();
    Ok(HistogramKL {
        bins,
        kl: kl.max(0.0),
        epsilon,
    })
}

/// Ratio of the top-k squared spectrum entries to the total, in [0, 1].
pub fn explained_variance(spectrum: &Spectrum, k: usize) -> Result<f64> {
    if k < 1 || k > spectrum.len() {
        return Err(Error::InvalidInput(format!(
            "k must be in [1, {}], got {k}",
            spectrum.len()
        )));
    }
    let total: f64 = spectrum.values().iter().map(|s| s * s).sum();
    if total <= 0.0 {
        return Err(Error::DegenerateInput("zero spectrum".into()));
    }
    let top: f64 = spectrum.values()[..k].iter().map(|s| s * s).sum();
    Ok(top / total)
}

/// Top-k singular values of a matrix, for histogram export.
pub fn spectrum_summary(x: &Matrix, top_k: usize) -> Result<Spectrum> {
    let r = x.rows().min(x.cols());
    if top_k > r {
        return Err(Error::InvalidInput(format!(
            "top_k must be <= {r}, got {top_k}"
        )));
    }
    let (_, s, _) = svd(x)?;
    Spectrum::new(s.values()[..top_k].to_vec())
}

//! Independent oracles for integration tests.
//!
//! Everything here deliberately avoids the library's own numerical
//! routes: singular values come from a cyclic Jacobi eigensolver on
//! the Gram matrix, AUROC from O(n^2) pair counting, integrals from
//! dense trapezoid sums. Slower, simpler, and checkable by hand.

#![allow(dead_code)]

use rankdet::linalg::Matrix;
use rankdet::synth::SplitMix64;

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method.
/// Input is a dense row-major n x n symmetric matrix.
pub fn jacobi_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let idx = |i: usize, j: usize| i * n + j;
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[idx(i, j)] * m[idx(i, j)];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + frobenius(&m)) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[idx(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[idx(p, p)];
                let aqq = m[idx(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Rotate rows/columns p and q.
                for k in 0..n {
                    let akp = m[idx(k, p)];
                    let akq = m[idx(k, q)];
                    m[idx(k, p)] = c * akp - s * akq;
                    m[idx(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[idx(p, k)];
                    let aqk = m[idx(q, k)];
                    m[idx(p, k)] = c * apk - s * aqk;
                    m[idx(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m[idx(i, i)]).collect();
    eigs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    eigs
}

fn frobenius(m: &[f64]) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Singular values of X via Jacobi eigenvalues of the smaller Gram
/// matrix, descending. Independent of the library's SVD path.
pub fn jacobi_singular_values(x: &Matrix) -> Vec<f64> {
    let (r, c) = (x.rows(), x.cols());
    let n = r.min(c);
    let mut gram = vec![0.0; n * n];
    if c <= r {
        // X^T X
        for i in 0..c {
            for j in 0..c {
                let mut s = 0.0;
                for k in 0..r {
                    s += x.get(k, i) * x.get(k, j);
                }
                gram[i * n + j] = s;
            }
        }
    } else {
        // X X^T
        for i in 0..r {
            for j in 0..r {
                let mut s = 0.0;
                for k in 0..c {
                    s += x.get(i, k) * x.get(j, k);
                }
                gram[i * n + j] = s;
            }
        }
    }
    jacobi_eigenvalues(&gram, n)
        .into_iter()
        .map(|e| e.max(0.0).sqrt())
        .collect()
}

/// AUROC by exhaustive pair counting, ties worth one half.
pub fn auroc_pairs(id: &[f64], ood: &[f64]) -> f64 {
    let mut num = 0.0;
    for &a in id {
        for &b in ood {
            if a > b {
                num += 1.0;
            } else if a == b {
                num += 0.5;
            }
        }
    }
    num / (id.len() as f64 * ood.len() as f64)
}

/// Type-7 (linear interpolation) quantile, written from the textbook
/// definition rather than shared code.
pub fn quantile_type7(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = p * (v.len() as f64 - 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// FPR at fixed TPR by explicit thresholding against the oracle
/// quantile.
pub fn fpr_oracle(id: &[f64], ood: &[f64], tpr: f64) -> f64 {
    let gamma = quantile_type7(id, 1.0 - tpr);
    ood.iter().filter(|&&x| x >= gamma).count() as f64 / ood.len() as f64
}

/// Dense trapezoid integral of f over [a, b] with n panels.
pub fn trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = 0.5 * (f(a) + f(b));
    for i in 1..n {
        s += f(a + i as f64 * h);
    }
    s * h
}

/// Draws samples from a density on [a, b] by numerical inverse-CDF
/// with a dense grid. Used to check the MP density against actual
/// eigenvalue histograms.
pub fn inverse_cdf_sample<F: Fn(f64) -> f64>(
    density: F,
    a: f64,
    b: f64,
    n_grid: usize,
    n_samples: usize,
    seed: u64,
) -> Vec<f64> {
    let h = (b - a) / n_grid as f64;
    let mut cdf = Vec::with_capacity(n_grid + 1);
    let mut acc = 0.0;
    cdf.push(0.0);
    for i in 0..n_grid {
        let x0 = a + i as f64 * h;
        acc += 0.5 * (density(x0) + density(x0 + h)) * h;
        cdf.push(acc);
    }
    let total = acc;
    let mut rng = SplitMix64::new(seed);
    (0..n_samples)
        .map(|_| {
            let u = rng.next_f64() * total;
            let k = cdf.partition_point(|&c| c < u).clamp(1, n_grid);
            let (c0, c1) = (cdf[k - 1], cdf[k]);
            let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
            a + (k as f64 - 1.0 + frac) * h
        })
        .collect()
}

/// Histogram KL between two sample sets over shared equal-width bins,
/// with additive smoothing. Written independently of the library's
/// `kl_to_mp`.
pub fn histogram_kl(p_samples: &[f64], q_samples: &[f64], bins: usize, eps: f64) -> f64 {
    let lo = p_samples
        .iter()
        .chain(q_samples)
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let hi = p_samples
        .iter()
        .chain(q_samples)
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo).max(1e-12);
    let bin_of = |x: f64| (((x - lo) / width * bins as f64) as usize).min(bins - 1);
    let mut p = vec![eps; bins];
    let mut q = vec![eps; bins];
    for &x in p_samples {
        p[bin_of(x)] += 1.0;
    }
    for &x in q_samples {
        q[bin_of(x)] += 1.0;
    }
    let (ps, qs): (f64, f64) = (p.iter().sum(), q.iter().sum());
    p.iter()
        .zip(&q)
        .map(|(&pi, &qi)| {
            let (pi, qi) = (pi / ps, qi / qs);
            pi * (pi / qi).ln()
        })
        .sum()
}

/// Seeded random matrix with i.i.d. Gaussian entries (for oracle-side
/// generation that should not depend on SynthConfig semantics).
pub fn gaussian_matrix(rows: usize, cols: usize, scale: f64, seed: u64) -> Matrix {
    let mut rng = SplitMix64::new(seed);
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| scale * rng.next_gaussian())
        .collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

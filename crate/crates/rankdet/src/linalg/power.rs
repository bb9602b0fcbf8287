//! Power iteration for the dominant singular triplet of a rectangular
//! matrix, using the coupled update
//! `v_k = X u_k / ||X u_k||`, `u_{k+1} = (v_k^T X / ||v_k^T X||)^T`
//! with `s = v_k^T X u_k`.

use super::{norm2, Matrix, SingularTriplet};
use crate::error::{Error, Result};
use crate::synth::rng::SplitMix64;

/// Starting vector for the iteration.
///
/// The default is the normalized all-ones vector: deterministic runs
/// are required for reproducible outputs, and the all-ones start has a
/// nonzero overlap with the dominant right singular vector for
/// generic input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PiStart {
    Ones,
    Seeded(u64),
}

impl Default for PiStart {
    fn default() -> Self {
        PiStart::Ones
    }
}

#[derive(Debug, Clone)]
pub struct PowerIterationResult {
    pub triplet: SingularTriplet,
    pub iters_used: usize,
    /// Set when the iteration oscillated while the estimated gap
    /// between the top two singular values was below 1e-6. Any vector
    /// in the dominant subspace yields the same `s` within tolerance,
    /// so this is a warning, not an error; callers may fall back to
    /// [`super::svd`].
    pub degenerate: bool,
}

pub fn power_iteration(
    x: &Matrix,
    max_iters: usize,
    tol: f64,
) -> Result<PowerIterationResult> {
    power_iteration_from(x, max_iters, tol, PiStart::Ones)
}

pub fn power_iteration_from(
    x: &Matrix,
    max_iters: usize,
    tol: f64,
    start: PiStart,
) -> Result<PowerIterationResult> {
    if max_iters < 1 {
        return Err(Error::InvalidInput("max_iters must be >= 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tol must be > 0, got {tol}")));
    }
    if x.is_zero() {
        return Err(Error::DegenerateInput(
            "power iteration on the zero matrix".into(),
        ));
    }

    let cols = x.cols();
    let mut u = starting_vector(cols, start);
    // The all-ones start can sit in the null space; fall back to
    // canonical basis vectors until X*u is nonzero.
    let mut basis = 0usize;
    let mut v = loop {
        let xu = x.matvec(&u)?;
        let n = norm2(&xu);
        if n > 0.0 {
            break xu.iter().map(|a| a / n).collect::<Vec<f64>>();
        }
        if basis >= cols {
            return Err(Error::DegenerateInput(
                "no starting vector escaped the null space".into(),
            ));
        }
        u = vec![0.0; cols];
        u[basis] = 1.0;
        basis += 1;
    };

    let fro2 = x.frobenius_norm().powi(2);
    let mut s_prev = rayleigh(x, &v, &u)?;
    let mut iters_used = max_iters;
    let mut rel_changes: Vec<f64> = Vec::new();
    let mut degenerate = false;

    for k in 1..=max_iters {
        let vt_x = x.vecmat(&v)?;
        let n = norm2(&vt_x);
        if n == 0.0 {
            break;
        }
        for (ui, a) in u.iter_mut().zip(&vt_x) {
            *ui = a / n;
        }
        let xu = x.matvec(&u)?;
        let nv = norm2(&xu);
        if nv == 0.0 {
            break;
        }
        for (vi, a) in v.iter_mut().zip(&xu) {
            *vi = a / nv;
        }
        let s = rayleigh(x, &v, &u)?;
        let rel = if s_prev.abs() > 0.0 {
            (s - s_prev).abs() / s_prev.abs()
        } else {
            f64::INFINITY
        };
        rel_changes.push(rel);
        if rel_changes.len() > 10 {
            rel_changes.remove(0);
        }
        s_prev = s;
        if rel < tol {
            iters_used = k;
            break;
        }
        if rel_changes.len() == 10 {
            let gap = relative_gap_estimate(s, fro2);
            if detect_oscillation(&rel_changes, gap) {
                degenerate = true;
            }
        }
    }

    let triplet = SingularTriplet::new(s_prev.max(0.0), v, u)?;
    Ok(PowerIterationResult {
        triplet,
        iters_used,
        degenerate,
    })
}

fn starting_vector(len: usize, start: PiStart) -> Vec<f64> {
    match start {
        PiStart::Ones => {
            let val = 1.0 / (len as f64).sqrt();
            vec![val; len]
        }
        PiStart::Seeded(seed) => {
            let mut rng = SplitMix64::new(seed);
            let mut v: Vec<f64> = (0..len).map(|_| rng.next_gaussian()).collect();
            let n = norm2(&v);
            if n == 0.0 {
                return starting_vector(len, PiStart::Ones);
            }
            for x in &mut v {
                *x /= n;
            }
            v
        }
    }
}

fn rayleigh(x: &Matrix, v: &[f64], u: &[f64]) -> Result<f64> {
    let xu = x.matvec(u)?;
    Ok(v.iter().zip(&xu).map(|(a, b)| a * b).sum())
}

/// Cheap estimate of the relative gap (s1 - s2) / s1 from the spectral
/// energy: s2 <= sqrt(||X||_F^2 - s^2) once s is close to s1.
fn relative_gap_estimate(s: f64, fro2: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let s2_bound = (fro2 - s * s).max(0.0).sqrt();
    ((s - s2_bound) / s).max(0.0)
}

/// Oscillation rule: over a full 10-step window the relative change
/// shows no net shrink while the gap estimate is below 1e-6.
fn detect_oscillation(window: &[f64], relative_gap: f64) -> bool {
    debug_assert_eq!(window.len(), 10);
    let first = window[0];
    let last = window[window.len() - 1];
    last >= first && relative_gap < 1e-6
}

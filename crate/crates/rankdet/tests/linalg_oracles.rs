//! Cross-checks of the SVD and power-iteration paths against a
//! Jacobi eigensolver oracle, plus property tests of the spectral
//! identities.

mod common;

use common::{gaussian_matrix, jacobi_singular_values};
use proptest::prelude::*;
use rankdet::linalg::{power_iteration, subtract_rank1, svd, Matrix, PiStart};
use rankdet::scoring::{dominant_triplet, Rank1Method};

#[test]
fn svd_matches_jacobi_oracle_on_random_shapes() {
    let shapes = [(3, 3), (8, 5), (5, 8), (20, 20), (17, 31), (40, 12)];
    for (i, &(r, c)) in shapes.iter().enumerate() {
        let x = gaussian_matrix(r, c, 1.0, 100 + i as u64);
        let (_, s, _) = svd(&x).unwrap();
        let oracle = jacobi_singular_values(&x);
        assert_eq!(s.len(), oracle.len());
        let scale = oracle[0].max(1.0);
        for (a, b) in s.values().iter().zip(&oracle) {
            assert!(
                (a - b).abs() < 1e-8 * scale,
                "shape {r}x{c}: {a} vs oracle {b}"
            );
        }
    }
}

#[test]
fn power_iteration_matches_jacobi_oracle() {
    for seed in 0..8u64 {
        let mut x = gaussian_matrix(30, 50, 1.0, 900 + seed);
        // Add a spike so the dominant value is well separated.
        let u: Vec<f64> = (0..30).map(|i| ((i as f64 + 1.0) * 0.37).sin()).collect();
        let v: Vec<f64> = (0..50).map(|j| ((j as f64 + 1.0) * 0.23).cos()).collect();
        let un = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        let vn = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let spike = Matrix::from_fn(30, 50, |i, j| 30.0 * u[i] / un * v[j] / vn);
        x = Matrix::from_fn(30, 50, |i, j| x.get(i, j) + spike.get(i, j));
        let r = power_iteration(&x, 200, 1e-14).unwrap();
        let oracle_s1 = jacobi_singular_values(&x)[0];
        assert!((r.triplet.s - oracle_s1).abs() < 1e-8 * oracle_s1);
    }
}

#[test]
fn dominant_triplet_routes_agree() {
    for seed in 0..6u64 {
        let x = gaussian_matrix(24, 36, 1.0, 40 + seed);
        let exact = dominant_triplet(&x, Rank1Method::ExactSvd).unwrap();
        let pi = dominant_triplet(&x, Rank1Method::PowerIteration(500)).unwrap();
        assert!((exact.s - pi.s).abs() < 1e-9 * exact.s);
        let dot: f64 = exact.u.iter().zip(&pi.u).map(|(a, b)| a * b).sum();
        assert!(dot.abs() > 1.0 - 1e-7, "left vectors disagree: |dot| = {}", dot.abs());
    }
}

#[test]
fn subtraction_matches_oracle_second_value() {
    for seed in 0..6u64 {
        let x = gaussian_matrix(15, 22, 1.0, 7000 + seed);
        let t = dominant_triplet(&x, Rank1Method::ExactSvd).unwrap();
        let reduced = subtract_rank1(&x, &t).unwrap();
        let s1_reduced = jacobi_singular_values(&reduced)[0];
        let s2_orig = jacobi_singular_values(&x)[1];
        assert!((s1_reduced - s2_orig).abs() < 1e-8 * s2_orig.max(1.0));
    }
}

#[test]
fn seeded_start_converges_to_same_value() {
    let x = gaussian_matrix(20, 20, 1.0, 5);
    let a = power_iteration(&x, 500, 1e-14).unwrap();
    let b =
        rankdet::linalg::power_iteration_from(&x, 500, 1e-14, PiStart::Seeded(99)).unwrap();
    assert!((a.triplet.s - b.triplet.s).abs() < 1e-8 * a.triplet.s);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    // Sum of squared singular values equals the squared Frobenius norm.
    #[test]
    fn energy_conservation(seed in 0u64..10_000, r in 2usize..12, c in 2usize..12) {
        let x = gaussian_matrix(r, c, 1.0, seed);
        let (_, s, _) = svd(&x).unwrap();
        let fro2: f64 = x.data().iter().map(|a| a * a).sum();
        let sum2: f64 = s.values().iter().map(|a| a * a).sum();
        prop_assert!((fro2 - sum2).abs() < 1e-9 * fro2.max(1e-12));
    }

    // Power iteration's estimate never exceeds the true s1 by more
    // than round-off, and grows with the iteration budget.
    #[test]
    fn pi_estimate_monotone_in_budget(seed in 0u64..10_000) {
        let x = gaussian_matrix(10, 14, 1.0, seed);
        let (_, s, _) = svd(&x).unwrap();
        let mut prev = 0.0;
        for budget in [1usize, 3, 10, 50] {
            let r = power_iteration(&x, budget, 1e-300).unwrap();
            prop_assert!(r.triplet.s <= s.top() * (1.0 + 1e-10));
            prop_assert!(r.triplet.s >= prev - 1e-10 * s.top());
            prev = r.triplet.s;
        }
    }

    // Removing the dominant triplet shrinks the Frobenius norm by
    // exactly s1^2.
    #[test]
    fn rank1_removal_energy_identity(seed in 0u64..10_000, r in 2usize..10, c in 2usize..10) {
        let x = gaussian_matrix(r, c, 1.0, seed);
        let t = dominant_triplet(&x, Rank1Method::ExactSvd).unwrap();
        let reduced = subtract_rank1(&x, &t).unwrap();
        let fro2: f64 = x.data().iter().map(|a| a * a).sum();
        let red2: f64 = reduced.data().iter().map(|a| a * a).sum();
        prop_assert!((fro2 - red2 - t.s * t.s).abs() < 1e-8 * fro2.max(1e-12));
    }
}

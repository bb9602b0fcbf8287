//! Metric cross-checks: rank-based AUROC and quantile-threshold FPR
//! against brute-force oracles, invariance properties, and the
//! committed regression fixture.

mod common;

use common::{auroc_pairs, fpr_oracle};
use proptest::prelude::*;
use rankdet::evalkit::{auroc, evaluate, fpr_at_tpr, EvalReport, ScoreSet};
use rankdet::synth::SplitMix64;

fn random_set(seed: u64, n_id: usize, n_ood: usize, quantize: bool) -> ScoreSet {
    let mut rng = SplitMix64::new(seed);
    let mut draw = |n: usize, shift: f64| -> Vec<f64> {
        (0..n)
            .map(|_| {
                let x = rng.next_gaussian() + shift;
                if quantize {
                    // Coarse rounding forces plenty of exact ties.
                    (x * 4.0).round() / 4.0
                } else {
                    x
                }
            })
            .collect()
    };
    let id = draw(n_id, 1.0);
    let ood = draw(n_ood, 0.0);
    ScoreSet::new(id, ood, "oracle").unwrap()
}

#[test]
fn auroc_matches_pair_counting_oracle() {
    for seed in 0..25u64 {
        let s = random_set(seed, 200 + (seed as usize % 300), 150, seed % 2 == 0);
        let fast = auroc(&s).unwrap();
        let slow = auroc_pairs(&s.id_scores, &s.ood_scores);
        assert!((fast - slow).abs() < 1e-9, "seed {seed}: {fast} vs {slow}");
    }
}

#[test]
fn fpr_matches_threshold_oracle() {
    for seed in 0..25u64 {
        let s = random_set(1000 + seed, 120, 180, seed % 3 == 0);
        for tpr in [0.8, 0.9, 0.95, 0.99] {
            let fast = fpr_at_tpr(&s, tpr).unwrap();
            let slow = fpr_oracle(&s.id_scores, &s.ood_scores, tpr);
            assert!((fast - slow).abs() < 1e-9, "seed {seed} tpr {tpr}");
        }
    }
}

#[test]
fn regression_fixture_matches_committed_report() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let id = rankdet::cli::read_scores(&dir.join("regression_id.csv")).unwrap();
    let ood = rankdet::cli::read_scores(&dir.join("regression_ood.csv")).unwrap();
    let report = evaluate(&ScoreSet::new(id, ood, "regression").unwrap()).unwrap();
    let golden: EvalReport = serde_json::from_str(
        &std::fs::read_to_string(dir.join("regression_report.json")).unwrap(),
    )
    .unwrap();
    assert!((report.auroc - golden.auroc).abs() < 1e-12);
    assert!((report.fpr95 - golden.fpr95).abs() < 1e-12);
    assert!((report.gamma - golden.gamma).abs() < 1e-9);
    assert_eq!(report.n_id, golden.n_id);
    assert_eq!(report.n_ood, golden.n_ood);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    // AUROC only depends on the joint ordering, so any strictly
    // increasing transform leaves it unchanged.
    #[test]
    fn auroc_invariant_under_monotone_transform(seed in 0u64..10_000) {
        let s = random_set(seed, 50, 40, seed % 2 == 0);
        let base = auroc(&s).unwrap();
        for f in [|x: f64| 3.0 * x + 1.0, |x: f64| x.exp() / (1.0 + x.exp()), |x: f64| x.powi(3) + x] {
            let t = ScoreSet::new(
                s.id_scores.iter().cloned().map(f).collect(),
                s.ood_scores.iter().cloned().map(f).collect(),
                "transformed",
            ).unwrap();
            prop_assert!((auroc(&t).unwrap() - base).abs() < 1e-12);
        }
    }

    // Swapping the sides reflects the AUROC around one half.
    #[test]
    fn auroc_reflection(seed in 0u64..10_000) {
        let s = random_set(seed, 30, 45, true);
        let fwd = auroc(&s).unwrap();
        let swapped = ScoreSet::new(s.ood_scores.clone(), s.id_scores.clone(), "rev").unwrap();
        prop_assert!((fwd + auroc(&swapped).unwrap() - 1.0).abs() < 1e-12);
    }

    // FPR never increases when the required TPR is relaxed.
    #[test]
    fn fpr_monotone(seed in 0u64..10_000) {
        let s = random_set(seed, 60, 60, false);
        let mut prev = 1.0f64;
        for tpr in [0.99, 0.95, 0.9, 0.7, 0.5] {
            let f = fpr_at_tpr(&s, tpr).unwrap();
            prop_assert!(f <= prev + 1e-12);
            prev = f;
        }
    }
}

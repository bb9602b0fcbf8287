//! End-to-end runs of the `rankdet` binary: exit codes, file formats,
//! and the determinism contract.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_rankdet")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn rankdet")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn synth(dir: &Path, spike: f64, seed: u64, n: usize) -> PathBuf {
    let out_dir = dir.join(format!("synth_{seed}_{n}"));
    run_ok(&[
        "synth",
        "--channels", "24",
        "--height", "5",
        "--width", "5",
        "--spike", &spike.to_string(),
        "--seed", &seed.to_string(),
        "--n", &n.to_string(),
        "--out-dir", out_dir.to_str().unwrap(),
    ]);
    out_dir.join("features.npy")
}

fn write_head(dir: &Path) -> (PathBuf, PathBuf) {
    use rankdet::npy::{write_npy, NpyArray};
    use rankdet::synth::gen_head;
    let head = gen_head(6, 24, 123).unwrap();
    let w_path = dir.join("W.npy");
    let b_path = dir.join("b.npy");
    write_npy(&NpyArray::Single(head.weight().clone()), &w_path).unwrap();
    let b = rankdet::linalg::Matrix::from_vec(1, 6, head.bias().to_vec()).unwrap();
    write_npy(&NpyArray::Single(b), &b_path).unwrap();
    (w_path, b_path)
}

#[test]
fn score_eval_round_trip_and_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let id = synth(dir, 1.0, 1, 30);
    let ood = synth(dir, 5.0, 2, 30);
    let (w, b) = write_head(dir);
    let head = format!("{},{}", w.display(), b.display());

    for (method, out) in [("energy", "id_e.csv"), ("rankfeat", "id_rf.csv")] {
        run_ok(&[
            "score", "--features", id.to_str().unwrap(),
            "--head", &head, "--method", method,
            "--out", dir.join(out).to_str().unwrap(),
        ]);
        run_ok(&[
            "score", "--features", ood.to_str().unwrap(),
            "--head", &head, "--method", method,
            "--out", dir.join(format!("ood_{out}")).to_str().unwrap(),
        ]);
        // Sidecar manifest exists and parses.
        let manifest_path = dir.join(format!("{out}.manifest.json"));
        let m = rankdet::cli::RunManifest::read(&manifest_path).unwrap();
        assert_eq!(m.command, "score");
        assert_eq!(m.params["method"], method);
    }

    let out = run_ok(&[
        "eval",
        "--id", dir.join("id_e.csv").to_str().unwrap(),
        "--ood", dir.join("ood_id_e.csv").to_str().unwrap(),
        "--out", dir.join("report.json").to_str().unwrap(),
    ]);
    let report: rankdet::evalkit::EvalReport =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(report.n_id, 30);
    assert_eq!(report.n_ood, 30);
    assert!((0.0..=1.0).contains(&report.auroc));

    // Missing file -> exit 1; bad flag value -> exit 2.
    let out = run(&["eval", "--id", "/nonexistent.csv", "--ood", "/nonexistent.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&[
        "eval",
        "--id", dir.join("id_e.csv").to_str().unwrap(),
        "--ood", dir.join("ood_id_e.csv").to_str().unwrap(),
        "--tpr", "1.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // rankweight without --layer -> exit 2.
    let out = run(&[
        "score", "--features", id.to_str().unwrap(),
        "--head", &head, "--method", "rankweight",
        "--out", dir.join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    // Truncated NPY -> exit 1.
    let bad = dir.join("bad.npy");
    std::fs::write(&bad, b"\x93NUMPY\x01\x00").unwrap();
    let out = run(&[
        "score", "--features", bad.to_str().unwrap(),
        "--head", &head, "--method", "energy",
        "--out", dir.join("y.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn synth_is_deterministic_and_empty_batch_valid() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let a = synth(dir, 2.0, 9, 10);
    let b_dir = dir.join("again");
    run_ok(&[
        "synth", "--channels", "24", "--height", "5", "--width", "5",
        "--spike", "2.0", "--seed", "9", "--n", "10",
        "--out-dir", b_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        std::fs::read(&a).unwrap(),
        std::fs::read(b_dir.join("features.npy")).unwrap()
    );

    let empty = synth(dir, 0.0, 3, 0);
    match rankdet::npy::read_npy(&empty).unwrap() {
        rankdet::npy::NpyArray::Batch { rows, cols, items } => {
            assert_eq!((rows, cols, items.len()), (24, 25, 0));
        }
        _ => panic!("expected a batch"),
    }
}

#[test]
fn synth_spike_sweep_monotone_ratio() {
    let tmp = tempfile::tempdir().unwrap();
    let mut prev = 0.0;
    for spike in [0.0, 2.0, 4.0] {
        let out_dir = tmp.path().join(format!("s{spike}"));
        run_ok(&[
            "synth", "--channels", "24", "--height", "5", "--width", "5",
            "--spike", &spike.to_string(), "--seed", "4", "--n", "8",
            "--out-dir", out_dir.to_str().unwrap(),
        ]);
        let m = rankdet::cli::RunManifest::read(&out_dir.join("manifest.json")).unwrap();
        let ratio = m.params["mean_top_singular_ratio"].as_f64().unwrap();
        assert!(ratio > prev, "spike {spike}: ratio {ratio} not > {prev}");
        prev = ratio;
    }
}

#[test]
fn diagnose_header_and_rank1_direction() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let feats = synth(dir, 6.0, 5, 12);
    let out = dir.join("diag.csv");
    run_ok(&[
        "diagnose", "--features", feats.to_str().unwrap(),
        "--remove-rank1", "--out", out.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), rankdet::cli::DIAGNOSE_HEADER);
    let mean_line = text.lines().last().unwrap();
    assert!(mean_line.starts_with("mean,"));
    let fields: Vec<&str> = mean_line.split(',').collect();
    let kl: f64 = fields[10].parse().unwrap();
    let kl_after: f64 = fields[11].parse().unwrap();
    assert!(kl_after < kl, "aggregate KL should drop: {kl} -> {kl_after}");
}

#[test]
fn bench_pi_output_is_deterministic_and_error_shrinks() {
    let tmp = tempfile::tempdir().unwrap();
    let out_a = tmp.path().join("a.csv");
    let out_b = tmp.path().join("b.csv");
    for out in [&out_a, &out_b] {
        run_ok(&[
            "bench-pi", "--iters", "5,20,100", "--shape", "64x100",
            "--trials", "5", "--seed", "0", "--out", out.to_str().unwrap(),
        ]);
    }
    assert_eq!(std::fs::read(&out_a).unwrap(), std::fs::read(&out_b).unwrap());
    let text = std::fs::read_to_string(&out_a).unwrap();
    let errs: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(errs[0] >= errs[1] && errs[1] >= errs[2]);
    assert!(errs[2] < 1e-6);
}

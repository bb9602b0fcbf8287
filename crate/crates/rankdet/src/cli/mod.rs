//! Command-line surface: `score`, `eval`, `diagnose`, `synth`, and
//! `bench-pi` subcommands over NPY inputs, with CSV/JSON outputs and
//! JSON sidecar manifests.
//!
//! Exit codes: 0 success, 1 I/O or format trouble, 2 validation
//! failure.

mod manifest;
mod score_files;

pub use manifest::RunManifest;
pub use score_files::{read_scores, write_scores_csv};

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::diagnostics::{
    explained_variance, fit_mp, kl_to_mp, sample_covariance_eigs, spectrum_summary,
};
use crate::error::{Error, Result};
use crate::evalkit::{evaluate, ScoreSet};
use crate::linalg::{power_iteration, subtract_rank1, svd, Matrix};
use crate::npy::{read_npy, write_npy, NpyArray};
use crate::pipeline::{forward_head, forward_layer, ClassifierHead, FeatureMatrix, LinearLayer};
use crate::scoring::{
    calibrate_react_tau, dominant_triplet, energy_score, fuse_logits, msp_score, odin_score,
    rankweight_prune, react_score, OdinConfig, Rank1Method, ReActConfig,
};
use crate::synth::{gen_feature_indexed, spike_ratio, ScoreMethod, SynthConfig};

#[derive(Debug, Parser)]
#[command(name = "rankdet", version, about = "Spectral post-hoc OOD scoring toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score feature matrices with one of the OOD score functions.
    Score(ScoreArgs),
    /// Compute FPR95/AUROC/threshold for ID and OOD score files.
    Eval(EvalArgs),
    /// Spectral and Marchenko-Pastur diagnostics for feature matrices.
    Diagnose(DiagnoseArgs),
    /// Generate seeded synthetic spiked-spectrum features.
    Synth(SynthArgs),
    /// Accuracy of power iteration against exact SVD per iteration
    /// budget.
    BenchPi(BenchPiArgs),
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// NPY file with features: (C, HW) or (batch, C, HW).
    #[arg(long)]
    pub features: PathBuf,
    /// Head weights and bias as `W.npy,b.npy`.
    #[arg(long)]
    pub head: String,
    /// msp | odin | energy | react | rankfeat | rankweight | rankfeat+rankweight
    #[arg(long)]
    pub method: String,
    /// Power-iteration budget for rank-1 extraction; 0 means exact SVD.
    #[arg(long, default_value_t = 0)]
    pub pi_iters: usize,
    /// NPY file with the deep layer matrix (rankweight methods).
    #[arg(long)]
    pub layer: Option<PathBuf>,
    /// ReAct threshold: a number, or `calibrate:<id-features.npy>`.
    #[arg(long)]
    pub react_tau: Option<String>,
    /// Percentile used by `calibrate:` (ReAct).
    #[arg(long, default_value_t = 90.0)]
    pub react_percentile: f64,
    /// ODIN temperature.
    #[arg(long, default_value_t = 1000.0)]
    pub odin_t: f64,
    /// Second features NPY for logit-space fusion.
    #[arg(long)]
    pub fuse: Option<PathBuf>,
    /// Worker threads for batch scoring.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output CSV path (`index,score`); a JSON manifest is written
    /// alongside.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// ID score file (CSV `index,score`, plain numbers, or JSON array).
    #[arg(long)]
    pub id: PathBuf,
    /// OOD score file.
    #[arg(long)]
    pub ood: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    pub tpr: f64,
    /// Output JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    /// Also report the KL after rank-1 removal.
    #[arg(long, default_value_t = false)]
    pub remove_rank1: bool,
    /// k for the explained-variance column.
    #[arg(long, default_value_t = 1)]
    pub explained_k: usize,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 64)]
    pub channels: usize,
    #[arg(long, default_value_t = 14)]
    pub height: usize,
    #[arg(long, default_value_t = 14)]
    pub width: usize,
    #[arg(long, default_value_t = 0.0)]
    pub spike: f64,
    #[arg(long, default_value_t = 1.0)]
    pub bulk_scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = false)]
    pub nonnegative: bool,
    /// Number of samples; 0 writes an empty batch.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchPiArgs {
    /// Comma-separated iteration budgets, e.g. `5,10,20,50,100`.
    #[arg(long, default_value = "5,10,20,50,100")]
    pub iters: String,
    /// Matrix shape as `ROWSxCOLS`.
    #[arg(long, default_value = "256x400")]
    pub shape: String,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Spike strength of the generated matrices.
    #[arg(long, default_value_t = 2.0)]
    pub spike: f64,
    /// Optional CSV output (deterministic columns only).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a parsed command, mapping errors to the exit-code contract.
pub fn run(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Score(args) => cmd_score(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::Synth(args) => cmd_synth(args),
        Command::BenchPi(args) => cmd_bench_pi(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_features(path: &Path) -> Result<Vec<FeatureMatrix>> {
    let arr = read_npy(path)?;
    arr.into_matrices()
        .into_iter()
        .map(|m| {
            let cols = m.cols();
            FeatureMatrix::new(m.rows(), 1, cols, m)
        })
        .collect()
}

fn load_features_post_activation(path: &Path) -> Result<Vec<FeatureMatrix>> {
    let arr = read_npy(path)?;
    arr.into_matrices()
        .into_iter()
        .map(|m| {
            let cols = m.cols();
            FeatureMatrix::new_post_activation(m.rows(), 1, cols, m)
        })
        .collect()
}

fn load_head(spec: &str) -> Result<ClassifierHead> {
    let (w_path, b_path) = spec.split_once(',').ok_or_else(|| {
        Error::InvalidInput(format!("--head expects 'W.npy,b.npy', got '{spec}'"))
    })?;
    let w = match read_npy(Path::new(w_path))? {
        NpyArray::Single(m) => m,
        NpyArray::Batch { .. } => {
            return Err(Error::InvalidInput(format!(
                "{w_path}: head weight must be 2-D"
            )))
        }
    };
    let b = match read_npy(Path::new(b_path))? {
        NpyArray::Single(m) => {
            if m.rows() == 1 {
                m.data().to_vec()
            } else if m.cols() == 1 {
                m.data().to_vec()
            } else {
                return Err(Error::InvalidInput(format!(
                    "{b_path}: bias must be a vector"
                )));
            }
        }
        NpyArray::Batch { .. } => {
            return Err(Error::InvalidInput(format!("{b_path}: bias must be 2-D")))
        }
    };
    ClassifierHead::new(w, b)
}

fn load_layer(path: &Path) -> Result<LinearLayer> {
    match read_npy(path)? {
        NpyArray::Single(m) => Ok(LinearLayer::new(m)),
        NpyArray::Batch { .. } => Err(Error::InvalidInput(format!(
            "{}: layer matrix must be 2-D",
            path.display()
        ))),
    }
}

fn rank1_method(pi_iters: usize) -> Rank1Method {
    if pi_iters == 0 {
        Rank1Method::ExactSvd
    } else {
        Rank1Method::PowerIteration(pi_iters)
    }
}

fn with_jobs<T: Send, F: Fn(usize) -> Result<T> + Sync + Send>(
    jobs: usize,
    n: usize,
    f: F,
) -> Result<Vec<T>> {
    if jobs <= 1 {
        (0..n).map(f).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
        pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

pub fn cmd_score(args: &ScoreArgs) -> Result<()> {
    let method = ScoreMethod::parse(&args.method)?;
    let head = load_head(&args.head)?;
    let rank1 = rank1_method(args.pi_iters);

    let react_cfg = if method == ScoreMethod::React {
        Some(resolve_react_tau(args)?)
    } else {
        None
    };
    let features = if method == ScoreMethod::React {
        load_features_post_activation(&args.features)?
    } else {
        load_features(&args.features)?
    };
    let layer = if method.needs_layer() {
        let path = args.layer.as_ref().ok_or_else(|| {
            Error::InvalidInput(format!("method {} requires --layer", method.name()))
        })?;
        Some(load_layer(path)?)
    } else {
        None
    };
    // The pruned layer is computed once and shared across samples.
    let pruned = layer.as_ref().map(rankweight_prune).transpose()?;
    let fuse_features = args
        .fuse
        .as_ref()
        .map(|p| load_features(p))
        .transpose()?;
    if let Some(fused) = &fuse_features {
        if !matches!(method, ScoreMethod::Energy | ScoreMethod::RankFeat) {
            return Err(Error::InvalidInput(format!(
                "--fuse is supported for energy and rankfeat, not {}",
                method.name()
            )));
        }
        if fused.len() != features.len() {
            return Err(Error::DimensionMismatch(format!(
                "--fuse has {} samples, --features has {}",
                fused.len(),
                features.len()
            )));
        }
    }
    let odin = OdinConfig::new(args.odin_t)?;

    let scores = with_jobs(args.jobs, features.len(), |i| -> Result<f64> {
        let feat = &features[i];
        let logits_for = |x: &FeatureMatrix| -> Result<crate::pipeline::Logits> {
            match method {
                ScoreMethod::RankFeat => {
                    Ok(crate::scoring::rankfeat_score(x, &head, rank1)?.1)
                }
                _ => forward_head(x, &head),
            }
        };
        match method {
            ScoreMethod::Msp => Ok(msp_score(&forward_head(feat, &head)?)?.0),
            ScoreMethod::Odin => Ok(odin_score(&forward_head(feat, &head)?, &odin)?.0),
            ScoreMethod::React => {
                Ok(react_score(feat, &head, react_cfg.as_ref().unwrap())?.0)
            }
            ScoreMethod::Energy | ScoreMethod::RankFeat => match &fuse_features {
                Some(fused) => {
                    let y_a = logits_for(feat)?;
                    let y_b = logits_for(&fused[i])?;
                    Ok(fuse_logits(&y_a, &y_b)?.0)
                }
                None => Ok(energy_score(&logits_for(feat)?)?.0),
            },
            ScoreMethod::RankWeight => {
                let next = forward_layer(feat, pruned.as_ref().unwrap())?;
                Ok(energy_score(&forward_head(&next, &head)?)?.0)
            }
            ScoreMethod::RankFeatRankWeight => {
                let next = forward_layer(feat, pruned.as_ref().unwrap())?;
                Ok(crate::scoring::rankfeat_score(&next, &head, rank1)?.0 .0)
            }
        }
    })?;

    write_scores_csv(&args.out, &scores)?;
    let manifest = RunManifest::for_command(
        "score",
        serde_json::json!({
            "features": args.features,
            "head": args.head,
            "method": method.name(),
            "pi_iters": args.pi_iters,
            "layer": args.layer,
            "react_tau": react_cfg.as_ref().map(|c| c.tau),
            "react_percentile": args.react_percentile,
            "odin_t": args.odin_t,
            "fuse": args.fuse,
            "jobs": args.jobs,
            "n_samples": scores.len(),
        }),
        vec![],
    );
    manifest.write_sidecar(&args.out)?;
    println!("scored {} samples with {} -> {}", scores.len(), method.name(), args.out.display());
    Ok(())
}

fn resolve_react_tau(args: &ScoreArgs) -> Result<ReActConfig> {
    let spec = args.react_tau.as_deref().ok_or_else(|| {
        Error::InvalidInput("method react requires --react-tau".into())
    })?;
    if let Some(path) = spec.strip_prefix("calibrate:") {
        let id_features = load_features_post_activation(Path::new(path))?;
        calibrate_react_tau(&id_features, args.react_percentile)
    } else {
        let tau: f64 = spec
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad --react-tau '{spec}'")))?;
        ReActConfig::new(tau)
    }
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let id = read_scores(&args.id)?;
    let ood = read_scores(&args.ood)?;
    let set = ScoreSet::new(id, ood, "cli")?;
    if !(args.tpr > 0.0 && args.tpr < 1.0) {
        return Err(Error::InvalidInput(format!(
            "--tpr must be in (0, 1), got {}",
            args.tpr
        )));
    }
    let mut report = evaluate(&set)?;
    if (args.tpr - 0.95).abs() > 1e-12 {
        report.fpr95 = crate::evalkit::fpr_at_tpr(&set, args.tpr)?;
        report.gamma = crate::evalkit::calibrate_gamma(&set.id_scores, args.tpr)?;
    }
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::InvalidInput(format!("serialize report: {e}")))?;
    println!("{json}");
    if let Some(out) = &args.out {
        std::fs::write(out, format!("{json}\n"))
            .map_err(|e| Error::io(out.display().to_string(), e))?;
    }
    Ok(())
}

/// Stable column set of the diagnose CSV.
pub const DIAGNOSE_HEADER: &str =
    "index,s1,s2,s3,s4,s5,explained_variance,sigma2,lambda_minus,lambda_plus,kl,kl_after";

pub fn cmd_diagnose(args: &DiagnoseArgs) -> Result<()> {
    let features = load_features(&args.features)?;
    if features.is_empty() {
        return Err(Error::InvalidInput("empty feature batch".into()));
    }
    let mut lines = vec![DIAGNOSE_HEADER.to_string()];
    let mut agg = vec![0.0f64; 11];
    for (i, feat) in features.iter().enumerate() {
        let mat = feat.mat();
        let r = mat.rows().min(mat.cols());
        let top = spectrum_summary(mat, r.min(5))?;
        let (_, full, _) = svd(mat)?;
        let k = args.explained_k.min(full.len());
        let ev = explained_variance(&full, k.max(1))?;
        let eigs = sample_covariance_eigs(mat)?;
        let fit = fit_mp(&eigs, mat.rows(), mat.cols())?;
        let kl = kl_to_mp(&eigs, &fit, args.bins, args.epsilon)?.kl;
        let kl_after = if args.remove_rank1 {
            let t = dominant_triplet(mat, Rank1Method::ExactSvd)?;
            let reduced = subtract_rank1(mat, &t)?;
            let eigs2 = sample_covariance_eigs(&reduced)?;
            let fit2 = fit_mp(&eigs2, reduced.rows(), reduced.cols())?;
            Some(kl_to_mp(&eigs2, &fit2, args.bins, args.epsilon)?.kl)
        } else {
            None
        };
        let mut svals = [0.0f64; 5];
        for (j, &s) in top.values().iter().enumerate() {
            svals[j] = s;
        }
        let row = [
            svals[0],
            svals[1],
            svals[2],
            svals[3],
            svals[4],
            ev,
            fit.sigma2,
            fit.lambda_minus,
            fit.lambda_plus,
            kl,
            kl_after.unwrap_or(f64::NAN),
        ];
        for (a, v) in agg.iter_mut().zip(&row) {
            *a += v;
        }
        lines.push(format!(
            "{i},{}",
            row.iter()
                .map(|v| if v.is_nan() { String::new() } else { format!("{v:.12e}") })
                .collect::<Vec<_>>()
                .join(",")
        ));
    }
    let n = features.len() as f64;
    lines.push(format!(
        "mean,{}",
        agg.iter()
            .map(|v| {
                let m = v / n;
                if m.is_nan() {
                    String::new()
                } else {
                    format!("{m:.12e}")
                }
            })
            .collect::<Vec<_>>()
            .join(",")
    ));
    let body = lines.join("\n") + "\n";
    std::fs::write(&args.out, body).map_err(|e| Error::io(args.out.display().to_string(), e))?;
    let manifest = RunManifest::for_command(
        "diagnose",
        serde_json::json!({
            "features": args.features,
            "bins": args.bins,
            "epsilon": args.epsilon,
            "remove_rank1": args.remove_rank1,
            "explained_k": args.explained_k,
            "n_samples": features.len(),
            "note": "synthetic stand-in features; not the original benchmark protocol",
        }),
        vec![],
    );
    manifest.write_sidecar(&args.out)?;
    println!("diagnosed {} samples -> {}", features.len(), args.out.display());
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        channels: args.channels,
        height: args.height,
        width: args.width,
        spike: args.spike,
        bulk_scale: args.bulk_scale,
        seed: args.seed,
        nonnegative: args.nonnegative,
    };
    cfg.validate()?;
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Error::io(args.out_dir.display().to_string(), e))?;

    let mut items = Vec::with_capacity(args.n);
    let mut ratio_sum = 0.0;
    for i in 0..args.n as u64 {
        let feat = gen_feature_indexed(&cfg, i)?;
        ratio_sum += spike_ratio(&feat)?;
        items.push(feat.mat().clone());
    }
    let batch = NpyArray::Batch {
        rows: cfg.channels,
        cols: cfg.height * cfg.width,
        items,
    };
    let npy_path = args.out_dir.join("features.npy");
    write_npy(&batch, &npy_path)?;

    let mean_ratio = if args.n > 0 {
        Some(ratio_sum / args.n as f64)
    } else {
        None
    };
    let manifest = RunManifest::for_command(
        "synth",
        serde_json::json!({
            "config": cfg,
            "n": args.n,
            "features": npy_path,
            "mean_top_singular_ratio": mean_ratio,
            "seed_scheme": "per-sample seed = base seed + index",
        }),
        vec![args.seed],
    );
    manifest.write(&args.out_dir.join("manifest.json"))?;
    println!("wrote {} samples -> {}", args.n, npy_path.display());
    Ok(())
}

pub fn cmd_bench_pi(args: &BenchPiArgs) -> Result<()> {
    let iters: Vec<usize> = args
        .iters
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidInput(format!("bad --iters entry '{s}'")))
        })
        .collect::<Result<_>>()?;
    if iters.is_empty() || iters.contains(&0) {
        return Err(Error::InvalidInput("--iters needs positive entries".into()));
    }
    let (rows, cols) = args
        .shape
        .split_once('x')
        .and_then(|(r, c)| Some((r.parse::<usize>().ok()?, c.parse::<usize>().ok()?)))
        .ok_or_else(|| Error::InvalidInput(format!("bad --shape '{}'", args.shape)))?;
    if args.trials == 0 {
        return Err(Error::InvalidInput("--trials must be >= 1".into()));
    }

    let cfg = SynthConfig {
        channels: rows,
        height: 1,
        width: cols,
        spike: args.spike,
        bulk_scale: 1.0,
        seed: args.seed,
        nonnegative: false,
    };
    let matrices: Vec<Matrix> = (0..args.trials as u64)
        .map(|i| Ok(gen_feature_indexed(&cfg, i)?.mat().clone()))
        .collect::<Result<_>>()?;
    let exact: Vec<f64> = matrices
        .iter()
        .map(|m| Ok(svd(m)?.1.top()))
        .collect::<Result<_>>()?;

    println!("{:>6} {:>16} {:>16} {:>12}", "iters", "median_rel_err", "mean_rel_err", "ms/matrix");
    let mut csv = vec!["iters,median_rel_err,mean_rel_err".to_string()];
    for &budget in &iters {
        let start = std::time::Instant::now();
        let mut errs: Vec<f64> = Vec::with_capacity(matrices.len());
        for (m, &s_exact) in matrices.iter().zip(&exact) {
            let r = power_iteration(m, budget, 1e-300)?;
            errs.push((r.triplet.s - s_exact).abs() / s_exact);
        }
        let elapsed = start.elapsed().as_secs_f64() * 1e3 / matrices.len() as f64;
        let mut sorted = errs.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = sorted[sorted.len() / 2];
        let mean = errs.iter().sum::<f64>() / errs.len() as f64;
        println!("{budget:>6} {median:>16.3e} {mean:>16.3e} {elapsed:>12.3}");
        csv.push(format!("{budget},{median:.12e},{mean:.12e}"));
    }
    if let Some(out) = &args.out {
        std::fs::write(out, csv.join("\n") + "\n")
            .map_err(|e| Error::io(out.display().to_string(), e))?;
        let manifest = RunManifest::for_command(
            "bench-pi",
            serde_json::json!({
                "iters": iters,
                "shape": [rows, cols],
                "trials": args.trials,
                "spike": args.spike,
            }),
            vec![args.seed],
        );
        manifest.write_sidecar(out)?;
    }
    Ok(())
}

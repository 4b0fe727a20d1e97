use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use phn_core::metrics::hypervolume;
use phn_core::moo::even_rays;
use phn_core::networks::{load_checkpoint, save_checkpoint, CheckpointHeader, HyperNetSpec, ParamVector};
use phn_core::problems::Split;
use phn_core::trainer::{
    baseline_train, evaluate_front, evaluate_losses, phn_train_with, FrontReport, MetricLog, TrainConfig, Variant,
};
use phn_core::Error as CoreError;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{ConfigError, ExperimentConfig, ProblemConfig, RaysSpec};

pub const CHECKPOINT_FILE: &str = "checkpoint.phn";
pub const METRICS_FILE: &str = "metrics.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FRONT_FILE: &str = "front.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const LEADERBOARD_FILE: &str = "leaderboard.csv";
pub const COMPARE_FILE: &str = "compare.csv";

/// Content hash in the style of `git hash-object`, but with SHA-256.
pub fn blob_hash(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    hex::encode(h.finalize())
}

/// Writes via a sibling temporary file and a rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// What a checkpoint needs to be evaluated on its own.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub problem: ProblemConfig,
    pub hyper: HyperNetSpec,
    pub ref_point: Vec<f64>,
    pub rays: RaysSpec,
}

pub struct TrainArgs<'a> {
    pub config_path: &'a Path,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

pub fn resolve_out_dir(flag: Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    flag.or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn require_hypernetwork(variant: Variant) -> Result<()> {
    if !variant.is_hypernetwork() {
        return Err(ConfigError(format!(
            "train.variant: {} trains one network per ray; use it under `compare`",
            variant.name()
        ))
        .into());
    }
    Ok(())
}

/// Trains into `out_dir`: checkpoint, metric log and run manifest.
pub fn cmd_train(args: TrainArgs<'_>) -> Result<PathBuf> {
    let (mut cfg, text) = ExperimentConfig::load(args.config_path)?;
    if let Some(seed) = args.seed {
        cfg.train.seed = seed;
    }
    require_hypernetwork(cfg.train.variant)?;
    let out = resolve_out_dir(args.out_dir, &cfg);
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    train_into(&cfg, &out)?;

    let mut inputs = vec![json!({
        "path": args.config_path.display().to_string(),
        "sha256": blob_hash(text.as_bytes()),
    })];
    if let Some(data) = cfg.problem.data_path() {
        let bytes = fs::read(data).with_context(|| format!("reading {}", data.display()))?;
        inputs.push(json!({"path": data.display().to_string(), "sha256": blob_hash(&bytes)}));
    }
    let manifest = json!({
        "command": "train",
        "config": cfg,
        "seed": cfg.train.seed,
        "steps": cfg.train.steps,
        "inputs": inputs,
        "outputs": [CHECKPOINT_FILE, METRICS_FILE],
    });
    write_atomic(
        &out.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;
    Ok(out)
}

/// Trains one hypernetwork, streaming the metric log and saving the
/// checkpoint. On divergence the last good parameters are saved first.
pub fn train_into(cfg: &ExperimentConfig, out: &Path) -> Result<(ParamVector, HyperNetSpec)> {
    let problem = cfg.problem.build()?;
    let spec = cfg.hyper_spec(problem.as_ref());
    let train = cfg.train_config()?;
    let run = RunSpec {
        problem: cfg.problem.clone(),
        hyper: spec.clone(),
        ref_point: cfg.eval.ref_point.clone(),
        rays: cfg.eval.rays.clone(),
    };
    let header = |steps: u64, theta: &ParamVector| -> Result<CheckpointHeader> {
        Ok(CheckpointHeader::new(
            serde_json::to_value(&run)?,
            train.seed,
            steps,
            theta.layout().clone(),
        ))
    };

    let metrics_path = out.join(METRICS_FILE);
    let file = File::create(&metrics_path).with_context(|| format!("creating {}", metrics_path.display()))?;
    let mut log = MetricLog::new(
        BufWriter::new(file),
        problem.num_objectives(),
        cfg.output.record_wall_clock,
    )?;
    let ckpt = out.join(CHECKPOINT_FILE);
    match phn_train_with(problem.as_ref(), &spec, &train, &mut |r| log.append(r)) {
        Ok(outcome) => {
            save_checkpoint(&ckpt, &header(train.steps as u64, &outcome.theta)?, &outcome.theta)?;
            Ok((outcome.theta, spec))
        }
        Err(CoreError::Diverged {
            step,
            reason,
            last_good,
        }) => {
            save_checkpoint(&ckpt, &header(step as u64, &last_good)?, &last_good)?;
            bail!(
                "training diverged at step {step} ({reason}); last good parameters saved to {}",
                ckpt.display()
            )
        }
        Err(e) => Err(e.into()),
    }
}

pub struct EvalArgs<'a> {
    pub checkpoint: &'a Path,
    pub rays: Option<&'a str>,
    pub ref_point: Option<&'a str>,
    pub out_dir: Option<PathBuf>,
    pub split: Split,
}

/// Evaluates a checkpoint: `front.csv` plus `summary.json`.
pub fn cmd_eval_front(args: EvalArgs<'_>) -> Result<FrontReport> {
    let (header, theta) =
        load_checkpoint(args.checkpoint).with_context(|| format!("loading {}", args.checkpoint.display()))?;
    let run: RunSpec = serde_json::from_value(header.spec).context("checkpoint run description")?;
    if theta.layout() != &run.hyper.layout() {
        bail!("checkpoint parameters do not match the stored hypernetwork layout");
    }
    let problem = run.problem.build()?;
    let m = problem.num_objectives();
    let rays = match args.rays {
        Some(text) => RaysSpec::parse(text)?.rays(m, "--rays")?,
        None => run.rays.rays(m, "eval.rays")?,
    };
    let ref_point = match args.ref_point {
        Some(text) => crate::config::parse_point(text, "--ref-point")?,
        None => run.ref_point.clone(),
    };
    if ref_point.len() != m {
        return Err(ConfigError(format!("--ref-point: has {} entries, expected {m}", ref_point.len())).into());
    }
    let report = evaluate_front(&theta, &run.hyper, problem.as_ref(), &rays, &ref_point, args.split)?;

    let out = args
        .out_dir
        .unwrap_or_else(|| args.checkpoint.parent().map(Path::to_path_buf).unwrap_or_default());
    fs::create_dir_all(&out)?;
    write_atomic(&out.join(FRONT_FILE), &front_csv(&report, m)?)?;
    let summary = json!({
        "hv": report.hv,
        "median_uniformity": report.median_uniformity(),
        "ref_point": ref_point,
        "split": args.split,
        "rows": report.rows.iter().map(|r| json!({
            "ray": r.ray.as_slice(),
            "losses": r.losses,
            "uniformity": r.uniformity,
        })).collect::<Vec<_>>(),
    });
    write_atomic(
        &out.join(SUMMARY_FILE),
        serde_json::to_string_pretty(&summary)?.as_bytes(),
    )?;
    Ok(report)
}

fn front_csv(report: &FrontReport, m: usize) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["ray_index".to_string()];
    header.extend((0..m).map(|j| format!("r_{j}")));
    header.extend((0..m).map(|j| format!("loss_{j}")));
    header.push("uniformity".into());
    w.write_record(&header)?;
    for (i, row) in report.rows.iter().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(row.ray.iter().map(|&v| fmt(v)));
        rec.extend(row.losses.iter().map(|&v| fmt(v)));
        rec.push(fmt(row.uniformity));
        w.write_record(&rec)?;
    }
    Ok(w.into_inner()?)
}

/// One grid cell of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub cell: usize,
    pub alpha: f64,
    pub trunk_width: Option<usize>,
    pub lr: f64,
    pub result: std::result::Result<(f64, f64), String>,
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build()?)
}

/// Trains every cell of the `[sweep]` grid and ranks them by validation HV.
/// A failing cell is recorded and the sweep carries on.
pub fn cmd_sweep(
    config_path: &Path,
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
    jobs: Option<usize>,
) -> Result<Vec<SweepRow>> {
    let (mut cfg, _) = ExperimentConfig::load(config_path)?;
    if let Some(seed) = seed {
        cfg.train.seed = seed;
    }
    require_hypernetwork(cfg.train.variant)?;
    let out = resolve_out_dir(out_dir, &cfg);
    fs::create_dir_all(&out)?;

    let axis = |v: &Vec<f64>, base: f64| if v.is_empty() { vec![base] } else { v.clone() };
    let widths: Vec<Option<usize>> = if cfg.sweep.trunk_width.is_empty() {
        vec![None]
    } else {
        cfg.sweep.trunk_width.iter().map(|&w| Some(w)).collect()
    };
    let mut cells = Vec::new();
    for &alpha in &axis(&cfg.sweep.alpha, cfg.train.alpha) {
        for &width in &widths {
            for &lr in &axis(&cfg.sweep.lr, cfg.train.lr) {
                cells.push((alpha, width, lr));
            }
        }
    }

    let run_cell = |i: usize, (alpha, width, lr): (f64, Option<usize>, f64)| -> Result<(f64, f64)> {
        let mut c = cfg.clone();
        c.train.alpha = alpha;
        c.train.lr = lr;
        if let Some(w) = width {
            let depth = c.trunk_hidden().len();
            c.model.trunk_hidden = Some(vec![w; depth]);
        }
        let dir = out.join(format!("cell-{i:03}"));
        fs::create_dir_all(&dir)?;
        let (theta, spec) = train_into(&c, &dir)?;
        let problem = c.problem.build()?;
        let report = evaluate_front(
            &theta,
            &spec,
            problem.as_ref(),
            &c.eval_rays()?,
            &c.eval.ref_point,
            Split::Validation,
        )?;
        Ok((report.hv, report.median_uniformity()))
    };
    let results: Vec<SweepRow> = thread_pool(jobs)?.install(|| {
        cells
            .par_iter()
            .enumerate()
            .map(|(i, &cell)| SweepRow {
                cell: i,
                alpha: cell.0,
                trunk_width: cell.1,
                lr: cell.2,
                result: run_cell(i, cell).map_err(|e| format!("{e:#}")),
            })
            .collect()
    });

    let mut ranked = results;
    ranked.sort_by(|a, b| match (&a.result, &b.result) {
        (Ok(x), Ok(y)) => y.0.total_cmp(&x.0).then(a.cell.cmp(&b.cell)),
        (Ok(_), Err(_)) => std::cmp::Ordering::Less,
        (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
        (Err(_), Err(_)) => a.cell.cmp(&b.cell),
    });
    let default_width = cfg.trunk_hidden()[0];
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "rank",
        "cell",
        "alpha",
        "trunk_width",
        "lr",
        "val_hv",
        "median_uniformity",
        "status",
    ])?;
    for (rank, row) in ranked.iter().enumerate() {
        let (hv, u, status) = match &row.result {
            Ok((hv, u)) => (fmt(*hv), fmt(*u), "ok".to_string()),
            Err(e) => (String::new(), String::new(), format!("error: {e}")),
        };
        w.write_record([
            (rank + 1).to_string(),
            row.cell.to_string(),
            fmt(row.alpha),
            row.trunk_width.unwrap_or(default_width).to_string(),
            fmt(row.lr),
            hv,
            u,
            status,
        ])?;
    }
    write_atomic(&out.join(LEADERBOARD_FILE), &w.into_inner()?)?;
    Ok(ranked)
}

/// One line of the runtime/HV comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct CompareRow {
    pub method: Variant,
    pub n_rays: usize,
    pub wall_clock_s: f64,
    /// Mean HV over the sampled ray subsets.
    pub hv: f64,
    pub hv_var: f64,
}

/// Hypernetworks are trained once; baselines once per ray of the largest
/// ray set. Each subset size `k` reports HV mean/variance over random
/// `k`-subsets of that set, and the training time those `k` rays cost.
pub fn cmd_compare(config_path: &Path, out_dir: Option<PathBuf>, seed: Option<u64>) -> Result<Vec<CompareRow>> {
    let (mut cfg, _) = ExperimentConfig::load(config_path)?;
    if let Some(seed) = seed {
        cfg.train.seed = seed;
    }
    let rows = compare(&cfg)?;
    let out = resolve_out_dir(out_dir, &cfg);
    fs::create_dir_all(&out)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "n_rays", "wall_clock_s", "hv", "hv_var"])?;
    for r in &rows {
        w.write_record([
            r.method.name().to_string(),
            r.n_rays.to_string(),
            fmt(r.wall_clock_s),
            fmt(r.hv),
            fmt(r.hv_var),
        ])?;
    }
    write_atomic(&out.join(COMPARE_FILE), &w.into_inner()?)?;
    Ok(rows)
}

pub fn compare(cfg: &ExperimentConfig) -> Result<Vec<CompareRow>> {
    let problem = cfg.problem.build()?;
    let m = problem.num_objectives();
    let full = *cfg.compare.n_rays.iter().max().expect("validated non-empty");
    let rays = even_rays(m, full)?;
    let full = rays.len();
    let base = cfg.train_config()?;
    let split = cfg.eval.split;

    let mut rows = Vec::new();
    for &method in &cfg.compare.methods {
        // per-ray losses, plus either one shared cost or one cost per ray
        let (losses, costs): (Vec<Vec<f64>>, Result<f64, Vec<f64>>) = if method.is_hypernetwork() {
            let spec = cfg.hyper_spec(problem.as_ref());
            let config = TrainConfig {
                variant: method,
                eval_rays: Vec::new(),
                ..base.clone()
            };
            let start = Instant::now();
            let outcome = phn_core::trainer::phn_train(problem.as_ref(), &spec, &config)?;
            let cost = start.elapsed().as_secs_f64();
            let report = evaluate_front(
                &outcome.theta,
                &spec,
                problem.as_ref(),
                &rays,
                &cfg.eval.ref_point,
                split,
            )?;
            (report.rows.into_iter().map(|r| r.losses).collect(), Ok(cost))
        } else {
            let mut losses = Vec::with_capacity(full);
            let mut costs = Vec::with_capacity(full);
            for (i, r) in rays.iter().enumerate() {
                let config = TrainConfig {
                    variant: method,
                    lr: cfg.compare.baseline_lr.unwrap_or(base.lr),
                    steps: cfg.compare.baseline_steps.unwrap_or(base.steps),
                    seed: base.seed.wrapping_add(i as u64),
                    eval_rays: Vec::new(),
                    ..base.clone()
                };
                let start = Instant::now();
                let phi = baseline_train(problem.as_ref(), Some(r), &config)?;
                costs.push(start.elapsed().as_secs_f64());
                losses.push(evaluate_losses(problem.as_ref(), &phi, split)?);
            }
            (losses, Err(costs))
        };

        for &k in &cfg.compare.n_rays {
            let k = k.min(full);
            let subsets = ray_subsets(full, k, cfg.compare.subsets, base.seed.wrapping_add(k as u64));
            let mut hvs = Vec::with_capacity(subsets.len());
            let mut times = Vec::with_capacity(subsets.len());
            for subset in &subsets {
                let pts: Vec<&[f64]> = subset.iter().map(|&i| losses[i].as_slice()).collect();
                hvs.push(hypervolume(&pts, &cfg.eval.ref_point)?);
                if let Err(per_ray) = &costs {
                    times.push(subset.iter().map(|&i| per_ray[i]).sum::<f64>());
                }
            }
            let n = hvs.len() as f64;
            let wall_clock_s = match &costs {
                Ok(shared) => *shared,
                Err(_) => times.iter().sum::<f64>() / n,
            };
            let mean = hvs.iter().sum::<f64>() / n;
            let var = hvs.iter().map(|h| (h - mean) * (h - mean)).sum::<f64>() / n;
            rows.push(CompareRow {
                method,
                n_rays: k,
                wall_clock_s,
                hv: mean,
                hv_var: var,
            });
        }
    }
    Ok(rows)
}

/// `count` random `k`-subsets of `0..n`; the full set once when `k == n`.
fn ray_subsets(n: usize, k: usize, count: usize, seed: u64) -> Vec<Vec<usize>> {
    if k >= n {
        return vec![(0..n).collect()];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut s = sample(&mut rng, n, k).into_vec();
            s.sort_unstable();
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_hash_matches_git_style_framing() {
        // sha256 of "blob 0\0"
        assert_eq!(
            blob_hash(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
        assert_ne!(blob_hash(b"a"), blob_hash(b"b"));
    }

    #[test]
    fn subsets_are_distinct_sorted_and_full_when_k_is_n() {
        let s = ray_subsets(25, 5, 20, 1);
        assert_eq!(s.len(), 20);
        for sub in &s {
            assert_eq!(sub.len(), 5);
            assert!(sub.windows(2).all(|w| w[0] < w[1]));
        }
        assert_eq!(ray_subsets(25, 25, 20, 1), vec![(0..25).collect::<Vec<_>>()]);
        assert_eq!(s, ray_subsets(25, 5, 20, 1));
    }
}

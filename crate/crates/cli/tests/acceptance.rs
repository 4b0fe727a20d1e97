//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every criterion prints its PASS/FAIL line; exits non-zero on any failure.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use phn_cli::commands::{cmd_compare, cmd_train, TrainArgs};
use phn_core::autodiff::{finite_diff_gradient, relative_error, NodeId, Tape};
use phn_core::metrics::{hypervolume, hypervolume_mc, uniformity};
use phn_core::moo::{
    dominates, epo_weights, even_rays, frank_wolfe_min_norm, min_norm_weights, non_dominated_filter, EpoMode,
    EpoProgram, GradientSet, PreferenceVector, DEFAULT_EPS_BAL,
};
use phn_core::networks::{flatten_grads, HyperNetSpec, ParamVector};
use phn_core::problems::{toy_front_oracle, Batch, Problem, Split, ToyProblem};
use phn_core::trainer::{baseline_train, evaluate_losses, phn_train, TrainConfig, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

type Outcome = Result<String, String>;
type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn ray(v: Vec<f64>) -> PreferenceVector {
    PreferenceVector::new(v).unwrap()
}

fn random_ray(m: usize, rng: &mut ChaCha8Rng) -> PreferenceVector {
    let raw: Vec<f64> = (0..m).map(|_| rng.random::<f64>() + 1e-3).collect();
    let s: f64 = raw.iter().sum();
    ray(raw.into_iter().map(|v| v / s).collect())
}

fn scalarised(tape: &mut Tape, losses: &[NodeId], w: &[f64]) -> NodeId {
    let mut total = tape.scale(losses[0], w[0]);
    for (&l, &wj) in losses.iter().zip(w).skip(1) {
        let t = tape.scale(l, wj);
        total = tape.add(total, t).unwrap();
    }
    total
}

/// Hypernetwork → target → loss gradient against central differences.
fn gradient_check(spec: &HyperNetSpec, problem: &ToyProblem, seed: u64, coords: Option<usize>) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    let theta = spec.init_params(seed);
    let r = random_ray(2, &mut rng);
    let w = [rng.random::<f64>(), rng.random::<f64>()];
    let layout = theta.layout().clone();
    let objective = |data: &[f64]| -> (Tape, Vec<NodeId>, NodeId) {
        let p = ParamVector::new(layout.clone(), data.to_vec()).unwrap();
        let mut tape = Tape::new();
        let nodes = p.to_leaves(&mut tape);
        let phi = spec.forward(&mut tape, &nodes, &r).unwrap();
        let losses = problem.losses(&mut tape, &phi, &Batch::default()).unwrap();
        let total = scalarised(&mut tape, &losses, &w);
        (tape, nodes, total)
    };
    let (tape, nodes, total) = objective(theta.data());
    let analytic = flatten_grads(&tape.backward(total).unwrap(), &nodes);

    let picks: Vec<usize> = match coords {
        None => (0..theta.len()).collect(),
        Some(k) => (0..k).map(|_| rng.random_range(0..theta.len())).collect(),
    };
    let base = theta.data().to_vec();
    let mut fd = Vec::with_capacity(picks.len());
    for &i in &picks {
        let g = finite_diff_gradient(
            |x: &[f64]| {
                let mut data = base.clone();
                data[i] = x[0];
                let (tape, _, total) = objective(&data);
                tape.value(total).item()
            },
            &[base[i]],
            1e-5,
        )
        .unwrap();
        fd.push(g[0]);
    }
    let picked: Vec<f64> = picks.iter().map(|&i| analytic[i]).collect();
    relative_error(&picked, &fd, 1e-12)
}

fn criterion_1() -> Outcome {
    let small = ToyProblem::new(5).unwrap();
    let small_spec = HyperNetSpec {
        trunk_hidden: vec![8, 8],
        ..HyperNetSpec::new(2, 8, small.target_spec().clone())
    };
    let full = ToyProblem::default();
    let full_spec = HyperNetSpec::new(2, 100, full.target_spec().clone());
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        // every coordinate of a small network, sampled coordinates of the full one
        worst = worst.max(gradient_check(&small_spec, &small, seed, None));
        worst = worst.max(gradient_check(&full_spec, &full, seed, Some(40)));
    }
    ensure!(worst < 1e-4, "worst relative error {worst:e}");
    Ok(format!("worst relative error {worst:.2e} over 20 seeds"))
}

/// Area covered by integer-cornered boxes, by counting unit cells.
fn cell_count_oracle(points: &[[i64; 2]], reference: [i64; 2]) -> f64 {
    let mut cells = 0;
    for x in 0..reference[0] {
        for y in 0..reference[1] {
            if points.iter().any(|p| p[0] <= x && p[1] <= y) {
                cells += 1;
            }
        }
    }
    cells as f64
}

/// Base seed of the per-instance estimator streams.
const MC_SEED: u64 = 300;

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_z: f64 = 0.0;
    for i in 0..50 {
        let m = 2 + i % 2;
        let n = rng.random_range(1..=30);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random::<f64>()).collect()).collect();
        let reference = vec![1.1; m];
        let exact = hypervolume(&pts, &reference).unwrap();
        // an estimator stream of its own per instance
        let mut mc_rng = ChaCha8Rng::seed_from_u64(MC_SEED + i as u64);
        let (est, se) = hypervolume_mc(&pts, &reference, 400_000, &mut mc_rng).unwrap();
        let z = (exact - est).abs() / se.max(1e-300);
        worst_z = worst_z.max(z);
        ensure!(z <= 3.0, "instance {i}: exact {exact}, mc {est} ± {se}");
    }
    // the estimator's own calibration: z-scores should look standard normal
    let mut zs = Vec::new();
    for i in 0..1000 {
        let m = 2 + i % 2;
        let n = rng.random_range(2..=30);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random::<f64>()).collect()).collect();
        let reference = vec![1.1; m];
        let exact = hypervolume(&pts, &reference).unwrap();
        let (est, se) = hypervolume_mc(&pts, &reference, 20_000, &mut rng).unwrap();
        if se > 0.0 {
            zs.push((est - exact) / se);
        }
    }
    let k = zs.len() as f64;
    let mean = zs.iter().sum::<f64>() / k;
    let var = zs.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / k;
    ensure!(
        mean.abs() < 0.15 && (0.8..1.2).contains(&var),
        "z-scores have mean {mean}, variance {var}"
    );

    let single = hypervolume(&[[1.0, 1.0]], &[2.0, 2.0]).unwrap();
    ensure!(single == 1.0, "single box gave {single}");
    let stairs = [[1.0, 3.0], [2.0, 2.0], [3.0, 1.0]];
    let oracle = cell_count_oracle(&[[1, 3], [2, 2], [3, 1]], [4, 4]);
    let hv = hypervolume(&stairs, &[4.0, 4.0]).unwrap();
    ensure!(hv == oracle, "staircase {hv} vs oracle {oracle}");
    let (est, se) = hypervolume_mc(&stairs, &[4.0, 4.0], 10_000_000, &mut rng).unwrap();
    ensure!((est - oracle).abs() <= 3.0 * se, "staircase mc {est} ± {se}");
    Ok(format!(
        "50 instances, worst |z| {worst_z:.2}; z mean {mean:.3}, variance {var:.3} over {k} more; hand cases 1 and {hv}"
    ))
}

fn random_gradients(m: usize, rng: &mut ChaCha8Rng) -> GradientSet {
    let d = rng.random_range(2..=12);
    let shift: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    // a shared offset makes some sets strongly correlated, others not
    let weight = rng.random::<f64>() * 2.0;
    GradientSet::new(
        (0..m)
            .map(|_| {
                (0..d)
                    .map(|k| rng.random_range(-1.0..1.0) + weight * shift[k])
                    .collect()
            })
            .collect(),
    )
    .unwrap()
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_slack = f64::INFINITY;
    for i in 0..100 {
        let m = 2 + i % 4;
        let set = random_gradients(m, &mut rng);
        let sol = min_norm_weights(&set).unwrap();
        let v = &sol.direction;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        for g in set.rows() {
            let gv: f64 = g.iter().zip(v).map(|(a, b)| a * b).sum();
            worst_slack = worst_slack.min(gv - vv);
            ensure!(gv >= vv - 1e-8, "set {i}: g·v = {gv}, |v|² = {vv}");
        }
    }
    let mut worst_gap: f64 = 0.0;
    for i in 0..100 {
        let set = random_gradients(2, &mut rng);
        let analytic = min_norm_weights(&set).unwrap().direction;
        let fw = set.combine(&frank_wolfe_min_norm(&set.gram(), 10_000, 1e-15));
        let gap = analytic.iter().zip(&fw).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst_gap = worst_gap.max(gap);
        ensure!(
            gap <= 1e-6,
            "pair {i}: analytic and Frank-Wolfe directions differ by {gap}"
        );
    }
    Ok(format!(
        "min g·v − |v|² = {worst_slack:.2e}; m=2 analytic vs Frank-Wolfe max diff {worst_gap:.1e}"
    ))
}

/// Best LP value over the simplex lattice of spacing `1/steps`.
fn grid_oracle(p: &EpoProgram, steps: usize) -> f64 {
    let m = p.objective.len();
    let mut best = f64::NEG_INFINITY;
    let mut beta = vec![0.0; m];
    let mut visit = |beta: &[f64]| {
        let c: f64 = p.constraint.iter().zip(beta).map(|(a, b)| a * b).sum();
        if c >= 0.0 {
            best = best.max(p.value(beta));
        }
    };
    match m {
        2 => {
            for i in 0..=steps {
                beta[0] = i as f64 / steps as f64;
                beta[1] = 1.0 - beta[0];
                visit(&beta);
            }
        }
        3 => {
            for i in 0..=steps {
                for j in 0..=steps - i {
                    beta[0] = i as f64 / steps as f64;
                    beta[1] = j as f64 / steps as f64;
                    beta[2] = (steps - i - j) as f64 / steps as f64;
                    visit(&beta);
                }
            }
        }
        _ => unreachable!(),
    }
    best
}

/// Exact LP optimum: the best feasible vertex of simplex ∩ {c·β ≥ 0}, which
/// lies at a simplex vertex or where the hyperplane cuts a simplex edge.
fn vertex_oracle(p: &EpoProgram) -> f64 {
    let m = p.objective.len();
    let c = &p.constraint;
    let mut best = f64::NEG_INFINITY;
    for i in 0..m {
        if c[i] >= 0.0 {
            best = best.max(p.objective[i]);
        }
        for j in i + 1..m {
            if (c[i] > 0.0) != (c[j] > 0.0) && c[i] != c[j] {
                let t = c[j] / (c[j] - c[i]);
                if (0.0..=1.0).contains(&t) {
                    best = best.max(t * p.objective[i] + (1.0 - t) * p.objective[j]);
                }
            }
        }
    }
    best
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_exact: f64 = 0.0;
    let mut worst_grid: f64 = f64::NEG_INFINITY;
    let mut done = 0;
    while done < 100 {
        let m = 2 + done % 2;
        let set = random_gradients(m, &mut rng);
        let r = random_ray(m, &mut rng);
        let losses: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..3.0)).collect();
        let program = EpoProgram::build(&set, &losses, &r).unwrap();
        if program.non_uniformity <= DEFAULT_EPS_BAL {
            continue;
        }
        let sol = epo_weights(&set, &losses, &r, DEFAULT_EPS_BAL).unwrap();
        ensure!(sol.mode == EpoMode::Balance, "instance {done}: mode {:?}", sol.mode);
        ensure!(
            program.is_feasible(&sol.weights, 1e-9),
            "instance {done}: infeasible {:?}",
            sol.weights
        );
        let lp = program.value(&sol.weights);
        let grid = grid_oracle(&program, 1000);
        let exact = vertex_oracle(&program);
        let scale: f64 = program.objective.iter().map(|v| v.abs()).fold(0.0, f64::max);
        ensure!(lp >= grid - 1e-6, "instance {done}: LP {lp} below grid {grid}");
        ensure!(
            lp - grid <= scale * 1e-3 + 1e-6,
            "instance {done}: LP {lp} exceeds grid {grid} by more than the lattice spacing allows"
        );
        ensure!(
            (lp - exact).abs() <= 1e-6,
            "instance {done}: LP {lp} vs exact vertex optimum {exact}"
        );
        worst_exact = worst_exact.max((lp - exact).abs());
        worst_grid = worst_grid.max(grid - lp);
        done += 1;
    }
    for i in 0..100 {
        let m = 2 + i % 4;
        let set = random_gradients(m, &mut rng);
        let r = random_ray(m, &mut rng);
        let c = rng.random_range(0.1..5.0);
        let losses: Vec<f64> = r.iter().map(|rj| c / rj).collect();
        let sol = epo_weights(&set, &losses, &r, DEFAULT_EPS_BAL).unwrap();
        ensure!(sol.mode == EpoMode::Descent, "balanced {i}: mode {:?}", sol.mode);
        ensure!(
            sol.weights == min_norm_weights(&set).unwrap().weights,
            "balanced {i}: not the min-norm weights"
        );
    }
    Ok(format!(
        "100 instances: |LP − exact| ≤ {worst_exact:.1e}, grid − LP ≤ {worst_grid:.1e}; 100 balanced inputs give min-norm"
    ))
}

fn toy_endpoints() -> [[f64; 2]; 2] {
    let far = 1.0 - (-4.0f64).exp();
    [[0.0, far], [far, 0.0]]
}

fn criterion_5() -> Outcome {
    let problem = ToyProblem::default();
    let spec = HyperNetSpec::new(2, 100, problem.target_spec().clone());
    let reference = vec![2.0, 2.0];
    let rays = even_rays(2, 25).unwrap();
    let mut config = TrainConfig::new(Variant::PhnEpo, 1e-3, 5000, reference.clone());
    config.eval_rays = rays.clone();
    let start = Instant::now();
    let outcome = phn_train(&problem, &spec, &config).unwrap();
    let report = outcome.history.last().unwrap();
    let oracle = hypervolume(&toy_front_oracle(10_000).unwrap(), &reference).unwrap();
    let ratio = report.hv / oracle;
    let median = report.median_uniformity();
    let interior = report
        .rows
        .iter()
        .filter(|r| r.losses.iter().cloned().fold(f64::INFINITY, f64::min) > 0.1)
        .count();
    ensure!(
        ratio >= 0.95,
        "PHN-EPO HV {} is {ratio:.4} of the oracle {oracle}",
        report.hv
    );
    ensure!(median >= 0.90, "median uniformity {median}");
    ensure!(interior >= 5, "only {interior} rays strictly inside the front");

    let ends = toy_endpoints();
    let mut worst: f64 = 0.0;
    for (i, r) in rays.iter().enumerate() {
        let mut cfg = TrainConfig::new(Variant::BaselineLs, 1e-3, 1000, reference.clone());
        cfg.seed = i as u64;
        let phi = baseline_train(&problem, Some(r), &cfg).unwrap();
        let l = evaluate_losses(&problem, &phi, Split::Validation).unwrap();
        let dist = ends
            .iter()
            .map(|e| ((l[0] - e[0]).powi(2) + (l[1] - e[1]).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(dist);
        ensure!(
            dist <= 0.05,
            "baseline-ls ray {:?} ended at {l:?}, {dist} from an endpoint",
            r.as_slice()
        );
    }
    Ok(format!(
        "HV {:.4} = {ratio:.3} × oracle, median uniformity {median:.3}, {interior} interior rays; \
         baseline-ls within {worst:.4} of an endpoint on all 25 rays ({:.1}s)",
        report.hv,
        start.elapsed().as_secs_f64()
    ))
}

/// Most HV decreases inside any window of five consecutive checkpoints.
fn worst_window(hv: &[f64]) -> usize {
    let drops: Vec<bool> = hv.windows(2).map(|w| w[1] < w[0]).collect();
    if drops.len() < 4 {
        return drops.iter().filter(|&&d| d).count();
    }
    drops
        .windows(4)
        .map(|w| w.iter().filter(|&&d| d).count())
        .max()
        .unwrap()
}

fn criterion_6() -> Outcome {
    let problem = ToyProblem::default();
    let spec = HyperNetSpec::new(2, 100, problem.target_spec().clone());
    let mut config = TrainConfig::new(Variant::PhnEpo, 1e-4, 240, vec![2.0, 2.0]);
    config.eval_rays = even_rays(2, 25).unwrap();
    config.eval_interval = 12;
    config.eval_split = Split::Validation;
    let outcome = phn_train(&problem, &spec, &config).unwrap();
    let hv: Vec<f64> = outcome.history.iter().map(|r| r.hv).collect();
    ensure!(hv.len() == 21, "expected 21 checkpoints, got {}", hv.len());
    let worst = worst_window(&hv);
    ensure!(worst <= 1, "{worst} decreases within one window of five: {hv:?}");
    Ok(format!(
        "{} checkpoints, HV {:.4} → {:.4}, at most {worst} decrease per window of five",
        hv.len(),
        hv[0],
        hv[hv.len() - 1]
    ))
}

const TOY_CONFIG: &str = r#"
[problem]
name = "toy"

[train]
variant = "phn-epo"
lr = 1e-3
steps = 5000

[eval]
rays = 25
ref_point = [2.0, 2.0]

[compare]
n_rays = [1, 5, 10, 25]
baseline_steps = 1000
"#;

fn criterion_7(dir: &Path) -> Outcome {
    let cfg = dir.join("compare.toml");
    fs::write(&cfg, TOY_CONFIG).unwrap();
    let rows = cmd_compare(&cfg, Some(dir.join("compare")), None).map_err(|e| format!("{e:#}"))?;
    let get = |m: Variant, k: usize| rows.iter().find(|r| r.method == m && r.n_rays == k).unwrap();
    let mut notes = Vec::new();
    for m in [Variant::BaselineLs, Variant::BaselineMgda] {
        let growth = get(m, 25).wall_clock_s / get(m, 1).wall_clock_s;
        ensure!(
            growth >= 3.0,
            "{} wall clock grows only {growth:.2}× from 1 to 25 rays",
            m.name()
        );
        notes.push(format!("{} ×{growth:.1}", m.name()));
    }
    for m in [Variant::PhnLs, Variant::PhnEpo] {
        let t: Vec<f64> = [1, 5, 10, 25].iter().map(|&k| get(m, k).wall_clock_s).collect();
        let (lo, hi) = t
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        ensure!(
            hi <= 1.2 * lo && lo >= 0.8 * hi,
            "{} wall clock varies: {t:?}",
            m.name()
        );
    }
    let (epo, ls) = (get(Variant::PhnEpo, 25).hv, get(Variant::BaselineLs, 25).hv);
    ensure!(epo >= ls, "PHN-EPO HV {epo} below baseline-ls {ls} at 25 rays");
    Ok(format!(
        "baseline growth {}; PHN cost constant; HV at 25 rays phn-epo {epo:.4} ≥ baseline-ls {ls:.4}",
        notes.join(", ")
    ))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_balanced: f64 = 0.0;
    let mut best_unbalanced = f64::NEG_INFINITY;
    for i in 0..1000 {
        let m = 2 + i % 4;
        let r = random_ray(m, &mut rng);
        if i % 2 == 0 {
            let c = rng.random_range(0.01..100.0);
            let l: Vec<f64> = r.iter().map(|rj| c / rj).collect();
            let u = uniformity(&r, &l).unwrap();
            worst_balanced = worst_balanced.max((u - 1.0).abs());
            ensure!((u - 1.0).abs() <= 1e-12, "balanced pair {i}: uniformity {u}");
        } else {
            let l: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..10.0)).collect();
            let weighted: Vec<f64> = r.iter().zip(&l).map(|(a, b)| a * b).collect();
            let spread = weighted.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                / weighted.iter().cloned().fold(f64::INFINITY, f64::min);
            let u = uniformity(&r, &l).unwrap();
            ensure!(spread > 1.0 && u < 1.0, "unbalanced pair {i}: uniformity {u}");
            best_unbalanced = best_unbalanced.max(u);
        }
        let l: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..10.0)).collect();
        let c = 10f64.powf(rng.random_range(-3.0..3.0));
        let scaled: Vec<f64> = l.iter().map(|v| c * v).collect();
        let (a, b) = (uniformity(&r, &l).unwrap(), uniformity(&r, &scaled).unwrap());
        ensure!((a - b).abs() <= 1e-12, "scaling by {c} moved uniformity {a} → {b}");
    }
    for i in 0..50 {
        let d = 2 + i % 3;
        // a coarse lattice makes ties and duplicates common
        let pts: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..d).map(|_| rng.random_range(0..12) as f64).collect())
            .collect();
        let brute: Vec<usize> = (0..pts.len())
            .filter(|&p| !(0..pts.len()).any(|q| dominates(&pts[q], &pts[p]).unwrap()))
            .collect();
        ensure!(
            non_dominated_filter(&pts) == brute,
            "set {i} (d={d}) disagrees with brute force"
        );
    }
    Ok(format!(
        "balanced |u − 1| ≤ {worst_balanced:.1e}, unbalanced max u {best_unbalanced:.4}; scale invariant; filter = brute force on 50 sets of 200"
    ))
}

fn criterion_9(dir: &Path) -> Outcome {
    let cfg = dir.join("determinism.toml");
    let text = TOY_CONFIG
        .replace("steps = 5000", "steps = 500")
        .replace("ref_point", "interval = 50\nref_point");
    fs::write(&cfg, text).unwrap();
    let run = |name: &str| {
        let out = dir.join(name);
        cmd_train(TrainArgs {
            config_path: &cfg,
            out_dir: Some(out.clone()),
            seed: None,
        })
        .map_err(|e| format!("{e:#}"))?;
        fs::read(out.join("metrics.csv")).map_err(|e| e.to_string())
    };
    let (a, b) = (run("first")?, run("second")?);
    ensure!(a == b, "metric logs differ");
    let lines = a.iter().filter(|&&c| c == b'\n').count();
    ensure!(lines == 1 + 11 * 25, "unexpected log length {lines}");
    Ok(format!("two runs, {} identical bytes", a.len()))
}

fn main() -> ExitCode {
    let dir = TempDir::new().unwrap();
    let criteria: Vec<(&str, Check)> = vec![
        ("gradient correctness", Box::new(criterion_1)),
        ("hypervolume oracle equivalence", Box::new(criterion_2)),
        ("descent-direction property", Box::new(criterion_3)),
        ("EPO contract", Box::new(criterion_4)),
        ("toy front reproduction", Box::new(criterion_5)),
        ("front-evolution trend", Box::new(criterion_6)),
        ("runtime tradeoff", Box::new(|| criterion_7(dir.path()))),
        ("metric identities", Box::new(criterion_8)),
        ("determinism", Box::new(|| criterion_9(dir.path()))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    }
}

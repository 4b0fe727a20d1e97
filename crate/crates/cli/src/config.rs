//! Experiment configuration files.
//!
//! A config is a TOML document with `problem`, `model`, `train`, `eval`,
//! `output`, `sweep` and `compare` tables. Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use phn_core::moo::{even_rays, PreferenceVector, DEFAULT_ALPHA, DEFAULT_EPS_BAL};
use phn_core::networks::{HyperNetSpec, DEFAULT_HEAD_SCALE};
use phn_core::problems::{
    load_csv_problem, synth_regression, Problem, Split, SynthSpec, TabularOptions, TargetColumn, ToyProblem, TOY_DIM,
};
use phn_core::trainer::{TrainConfig, Variant};
use serde::{Deserialize, Serialize};

/// Invalid configuration or arguments; the binary exits with status 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(key: &str, msg: impl fmt::Display) -> ConfigError {
    ConfigError(format!("{key}: {msg}"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemConfig {
    Toy {
        #[serde(default = "toy_dim")]
        dim: usize,
    },
    SynthRegression {
        n: usize,
        input_dim: usize,
        tasks: usize,
        #[serde(default)]
        noise: f64,
        #[serde(default)]
        hidden: Option<Vec<usize>>,
        #[serde(default)]
        seed: u64,
    },
    Csv {
        path: PathBuf,
        targets: Vec<TargetColumn>,
        #[serde(default)]
        categorical: Vec<String>,
        #[serde(default)]
        hidden: Option<Vec<usize>>,
        #[serde(default)]
        split_seed: u64,
    },
}

fn toy_dim() -> usize {
    TOY_DIM
}

impl ProblemConfig {
    /// Resolves a relative CSV path against `base`.
    pub fn resolved(&self, base: &Path) -> Self {
        match self {
            ProblemConfig::Csv { path, .. } if path.is_relative() => {
                let mut out = self.clone();
                if let ProblemConfig::Csv { path: p, .. } = &mut out {
                    *p = base.join(path);
                }
                out
            }
            _ => self.clone(),
        }
    }

    /// Data file behind the problem, if any.
    pub fn data_path(&self) -> Option<&Path> {
        match self {
            ProblemConfig::Csv { path, .. } => Some(path),
            _ => None,
        }
    }

    fn is_tabular(&self) -> bool {
        !matches!(self, ProblemConfig::Toy { .. })
    }

    pub fn build(&self) -> anyhow::Result<Box<dyn Problem>> {
        let default_hidden = || vec![16];
        Ok(match self {
            ProblemConfig::Toy { dim } => Box::new(ToyProblem::new(*dim)?),
            ProblemConfig::SynthRegression {
                n,
                input_dim,
                tasks,
                noise,
                hidden,
                seed,
            } => Box::new(synth_regression(&SynthSpec {
                n: *n,
                input_dim: *input_dim,
                tasks: *tasks,
                noise: *noise,
                hidden: hidden.clone().unwrap_or_else(default_hidden),
                seed: *seed,
            })?),
            ProblemConfig::Csv {
                path,
                targets,
                categorical,
                hidden,
                split_seed,
            } => Box::new(load_csv_problem(
                path,
                targets,
                &TabularOptions {
                    hidden: hidden.clone().unwrap_or_else(default_hidden),
                    categorical: categorical.clone(),
                    split_seed: *split_seed,
                },
            )?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Hidden widths of the hypernetwork trunk; defaults to two layers of
    /// 100 (toy) or 25 (tabular problems).
    #[serde(default)]
    pub trunk_hidden: Option<Vec<usize>>,
    #[serde(default = "head_scale")]
    pub head_scale: f64,
}

fn head_scale() -> f64 {
    DEFAULT_HEAD_SCALE
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            trunk_hidden: None,
            head_scale: DEFAULT_HEAD_SCALE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub variant: Variant,
    pub lr: f64,
    pub steps: usize,
    #[serde(default = "one")]
    pub batch_size: usize,
    #[serde(default = "alpha")]
    pub alpha: f64,
    #[serde(default = "eps_bal")]
    pub eps_bal: f64,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}
fn alpha() -> f64 {
    DEFAULT_ALPHA
}
fn eps_bal() -> f64 {
    DEFAULT_EPS_BAL
}

/// Either a count of evenly spaced rays or explicit preference vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RaysSpec {
    Count(usize),
    List(Vec<Vec<f64>>),
}

impl RaysSpec {
    /// Accepts `25` or `0.2,0.8;0.5,0.5`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let text = text.trim();
        if let Ok(n) = text.parse::<usize>() {
            return Ok(RaysSpec::Count(n));
        }
        let rays = text
            .split(';')
            .map(|ray| {
                ray.split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad("--rays", format!("cannot parse '{text}': {e}")))?;
        Ok(RaysSpec::List(rays))
    }

    pub fn rays(&self, m: usize, key: &str) -> Result<Vec<PreferenceVector>, ConfigError> {
        match self {
            RaysSpec::Count(0) => Err(bad(key, "need at least one ray")),
            RaysSpec::Count(n) => even_rays(m, *n).map_err(|e| bad(key, e)),
            RaysSpec::List(list) => list
                .iter()
                .map(|r| {
                    if r.len() != m {
                        return Err(bad(key, format!("ray {r:?} has {} entries, expected {m}", r.len())));
                    }
                    PreferenceVector::new(r.clone()).map_err(|e| bad(key, e))
                })
                .collect(),
        }
    }
}

pub fn parse_point(text: &str, key: &str) -> Result<Vec<f64>, ConfigError> {
    text.split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| bad(key, format!("cannot parse '{text}': {e}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub rays: RaysSpec,
    pub ref_point: Vec<f64>,
    /// Training steps between front reports; 0 logs only the first and last.
    #[serde(default)]
    pub interval: usize,
    #[serde(default = "validation")]
    pub split: Split,
}

fn validation() -> Split {
    Split::Validation
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// Write measured times into the metric log instead of zeros.
    #[serde(default)]
    pub record_wall_clock: bool,
}

/// Grid axes; an empty axis keeps the base value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub alpha: Vec<f64>,
    /// Width of every trunk layer.
    #[serde(default)]
    pub trunk_width: Vec<usize>,
    #[serde(default)]
    pub lr: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    #[serde(default = "n_rays")]
    pub n_rays: Vec<usize>,
    #[serde(default = "methods")]
    pub methods: Vec<Variant>,
    /// Random ray subsets drawn per subset size.
    #[serde(default = "subsets")]
    pub subsets: usize,
    #[serde(default)]
    pub baseline_steps: Option<usize>,
    #[serde(default)]
    pub baseline_lr: Option<f64>,
}

fn n_rays() -> Vec<usize> {
    vec![1, 5, 10, 25]
}
fn methods() -> Vec<Variant> {
    vec![
        Variant::PhnLs,
        Variant::PhnEpo,
        Variant::BaselineLs,
        Variant::BaselineMgda,
    ]
}
fn subsets() -> usize {
    20
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            n_rays: n_rays(),
            methods: methods(),
            subsets: subsets(),
            baseline_steps: None,
            baseline_lr: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub model: ModelConfig,
    pub train: TrainSection,
    pub eval: EvalSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub compare: CompareSection,
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(key, format!("must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`, resolving data paths relative to its directory.
    pub fn load(path: &Path) -> anyhow::Result<(Self, String)> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.problem = cfg.problem.resolved(base);
        if let Some(dir) = &cfg.output.dir {
            if dir.is_relative() {
                cfg.output.dir = Some(base.join(dir));
            }
        }
        Ok((cfg, text))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = &self.train;
        positive("train.lr", t.lr)?;
        positive("train.alpha", t.alpha)?;
        if t.batch_size == 0 {
            return Err(bad("train.batch_size", "must be at least 1"));
        }
        if !(t.eps_bal >= 0.0 && t.eps_bal.is_finite()) {
            return Err(bad("train.eps_bal", format!("must be non-negative, got {}", t.eps_bal)));
        }
        positive("model.head_scale", self.model.head_scale)?;
        if let Some(h) = &self.model.trunk_hidden {
            if h.contains(&0) {
                return Err(bad("model.trunk_hidden", "widths must be positive"));
            }
        }
        match &self.problem {
            ProblemConfig::Toy { dim: 0 } => return Err(bad("problem.dim", "must be positive")),
            ProblemConfig::SynthRegression { tasks, noise, .. } => {
                if *tasks < 2 {
                    return Err(bad("problem.tasks", "need at least two tasks"));
                }
                if !(*noise >= 0.0 && noise.is_finite()) {
                    return Err(bad("problem.noise", format!("must be non-negative, got {noise}")));
                }
            }
            ProblemConfig::Csv { targets, .. } if targets.len() < 2 => {
                return Err(bad("problem.targets", "need at least two target columns"));
            }
            _ => {}
        }
        let m = self.num_objectives();
        if self.eval.ref_point.len() != m {
            return Err(bad(
                "eval.ref_point",
                format!("has {} entries, expected {m}", self.eval.ref_point.len()),
            ));
        }
        if self.eval.ref_point.iter().any(|v| !v.is_finite()) {
            return Err(bad("eval.ref_point", "must be finite"));
        }
        self.eval.rays.rays(m, "eval.rays")?;
        for (i, &a) in self.sweep.alpha.iter().enumerate() {
            positive(&format!("sweep.alpha[{i}]"), a)?;
        }
        for (i, &lr) in self.sweep.lr.iter().enumerate() {
            positive(&format!("sweep.lr[{i}]"), lr)?;
        }
        if self.sweep.trunk_width.contains(&0) {
            return Err(bad("sweep.trunk_width", "widths must be positive"));
        }
        let c = &self.compare;
        if c.n_rays.is_empty() || c.n_rays.contains(&0) {
            return Err(bad("compare.n_rays", "need positive ray counts"));
        }
        if c.subsets == 0 {
            return Err(bad("compare.subsets", "must be at least 1"));
        }
        if let Some(lr) = c.baseline_lr {
            positive("compare.baseline_lr", lr)?;
        }
        Ok(())
    }

    pub fn num_objectives(&self) -> usize {
        match &self.problem {
            ProblemConfig::Toy { .. } => 2,
            ProblemConfig::SynthRegression { tasks, .. } => *tasks,
            ProblemConfig::Csv { targets, .. } => targets.len(),
        }
    }

    pub fn trunk_hidden(&self) -> Vec<usize> {
        self.model.trunk_hidden.clone().unwrap_or_else(|| {
            let width = if self.problem.is_tabular() { 25 } else { 100 };
            vec![width, width]
        })
    }

    pub fn hyper_spec(&self, problem: &dyn Problem) -> HyperNetSpec {
        HyperNetSpec {
            pref_dim: problem.num_objectives(),
            trunk_hidden: self.trunk_hidden(),
            target: problem.target_spec().clone(),
            head_scale: self.model.head_scale,
        }
    }

    pub fn eval_rays(&self) -> Result<Vec<PreferenceVector>, ConfigError> {
        self.eval.rays.rays(self.num_objectives(), "eval.rays")
    }

    pub fn train_config(&self) -> Result<TrainConfig, ConfigError> {
        let t = &self.train;
        Ok(TrainConfig {
            variant: t.variant,
            alpha: t.alpha,
            lr: t.lr,
            batch_size: t.batch_size,
            steps: t.steps,
            seed: t.seed,
            eps_bal: t.eps_bal,
            eval_rays: self.eval_rays()?,
            eval_interval: self.eval.interval,
            reference_point: self.eval.ref_point.clone(),
            eval_split: self.eval.split,
        })
    }
}

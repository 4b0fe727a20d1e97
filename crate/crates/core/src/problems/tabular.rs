use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Batch, ObjectiveKind, Problem, Split};
use crate::autodiff::{NodeId, Tape, Tensor};
use crate::error::{Error, Result};
use crate::networks::{EmbeddingSpec, MlpSpec, ParamVector, TargetInput, TargetSpec};

const TRAIN_FRACTION: f64 = 0.7;
const VALIDATION_FRACTION: f64 = 0.1;

/// Disjoint row sets covering a dataset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndices {
    /// Seeded shuffle cut 70/10/20 (rounded; the test split takes the rest).
    pub fn shuffled(n: usize, seed: u64) -> Self {
        let mut rows: Vec<usize> = (0..n).collect();
        rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_train = ((n as f64 * TRAIN_FRACTION).round() as usize).min(n);
        let n_val = ((n as f64 * VALIDATION_FRACTION).round() as usize).min(n - n_train);
        let test = rows.split_off(n_train + n_val);
        let validation = rows.split_off(n_train);
        Self {
            train: rows,
            validation,
            test,
        }
    }

    pub fn get(&self, split: Split) -> &[usize] {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
            Split::Test => &self.test,
        }
    }
}

/// Numeric features (standardised with training statistics), index-coded
/// categorical columns and one target column per objective.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    numeric_names: Vec<String>,
    numeric: Vec<Vec<f64>>,
    categorical_names: Vec<String>,
    categorical: Vec<Vec<usize>>,
    cardinalities: Vec<usize>,
    target_names: Vec<String>,
    targets: Vec<Vec<f64>>,
    splits: SplitIndices,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.targets.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn numeric_names(&self) -> &[String] {
        &self.numeric_names
    }

    /// Row-major numeric features.
    pub fn numeric(&self) -> &[Vec<f64>] {
        &self.numeric
    }

    pub fn categorical_names(&self) -> &[String] {
        &self.categorical_names
    }

    /// One index column per categorical feature.
    pub fn categorical(&self) -> &[Vec<usize>] {
        &self.categorical
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn target_names(&self) -> &[String] {
        &self.target_names
    }

    /// One column per objective.
    pub fn targets(&self) -> &[Vec<f64>] {
        &self.targets
    }

    pub fn splits(&self) -> &SplitIndices {
        &self.splits
    }

    fn standardize(&mut self) {
        let width = self.numeric_names.len();
        let train = &self.splits.train;
        if train.is_empty() {
            return;
        }
        for j in 0..width {
            let n = train.len() as f64;
            let mean = train.iter().map(|&i| self.numeric[i][j]).sum::<f64>() / n;
            let var = train.iter().map(|&i| (self.numeric[i][j] - mean).powi(2)).sum::<f64>() / n;
            let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
            for row in &mut self.numeric {
                row[j] = (row[j] - mean) / sd;
            }
        }
    }

    fn input(&self, rows: &[usize]) -> TargetInput {
        let width = self.numeric_names.len();
        let mut data = Vec::with_capacity(rows.len() * width);
        for &i in rows {
            data.extend_from_slice(&self.numeric[i]);
        }
        TargetInput {
            numeric: Tensor::new(vec![rows.len(), width], data).expect("row width"),
            categorical: self
                .categorical
                .iter()
                .map(|col| rows.iter().map(|&i| col[i]).collect())
                .collect(),
        }
    }
}

/// Embedding width for a categorical column with `k` levels: `min(8, ⌈k/2⌉)`.
pub(crate) fn embedding_dim(k: usize) -> usize {
    k.div_ceil(2).clamp(1, 8)
}

/// Multi-output tabular task: one shared head, one loss per target column.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularProblem {
    name: String,
    dataset: Dataset,
    objectives: Vec<ObjectiveKind>,
    target: TargetSpec,
}

impl TabularProblem {
    fn new(name: String, dataset: Dataset, objectives: Vec<ObjectiveKind>, hidden: Vec<usize>) -> Result<Self> {
        if objectives.len() < 2 {
            return Err(Error::invalid("a problem needs at least two objectives"));
        }
        let target = TargetSpec::Mlp(MlpSpec {
            input_dim: dataset.numeric_names.len(),
            hidden,
            head_dims: vec![objectives.len()],
            embeddings: dataset
                .cardinalities
                .iter()
                .map(|&k| EmbeddingSpec {
                    cardinality: k,
                    dim: embedding_dim(k),
                })
                .collect(),
        });
        target.validate()?;
        Ok(Self {
            name,
            dataset,
            objectives,
            target,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn objectives(&self) -> &[ObjectiveKind] {
        &self.objectives
    }
}

impl Problem for TabularProblem {
    fn name(&self) -> &str {
        &self.name
    }

    fn num_objectives(&self) -> usize {
        self.objectives.len()
    }

    fn target_spec(&self) -> &TargetSpec {
        &self.target
    }

    /// Uniform draws with replacement from the training rows.
    fn sample_batch(&self, batch_size: usize, rng: &mut ChaCha8Rng) -> Batch {
        let train = &self.dataset.splits.train;
        let rows = (0..batch_size)
            .map(|_| train[rng.random_range(0..train.len())])
            .collect();
        Batch { rows }
    }

    fn full_batch(&self, split: Split) -> Batch {
        Batch {
            rows: self.dataset.splits.get(split).to_vec(),
        }
    }

    fn losses(&self, tape: &mut Tape, phi: &[NodeId], batch: &Batch) -> Result<Vec<NodeId>> {
        if batch.rows.is_empty() {
            return Err(Error::invalid("empty batch"));
        }
        let input = self.dataset.input(&batch.rows);
        let head = self.target.forward(tape, phi, Some(&input))?[0];
        let mut out = Vec::with_capacity(self.objectives.len());
        for (j, kind) in self.objectives.iter().enumerate() {
            let pred = tape.select_column(head, j)?;
            let y: Vec<f64> = batch.rows.iter().map(|&i| self.dataset.targets[j][i]).collect();
            let y = tape.leaf(Tensor::new(vec![batch.rows.len(), 1], y)?);
            out.push(match kind {
                ObjectiveKind::Mse => tape.mse(pred, y)?,
                ObjectiveKind::Bce => tape.bce_with_logits(pred, y)?,
            });
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetColumn {
    pub column: String,
    pub objective: ObjectiveKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabularOptions {
    /// Hidden widths of the target network.
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    /// Columns read as categorical even when every cell parses as a number.
    #[serde(default)]
    pub categorical: Vec<String>,
    /// Seed of the row shuffle behind the train/validation/test split.
    #[serde(default)]
    pub split_seed: u64,
}

fn default_hidden() -> Vec<usize> {
    vec![16]
}

impl Default for TabularOptions {
    fn default() -> Self {
        Self {
            hidden: default_hidden(),
            categorical: Vec::new(),
            split_seed: 0,
        }
    }
}

/// Reads a headed CSV file into a tabular problem.
///
/// Target columns must be numeric (and within `[0, 1]` for `bce`). Every
/// other column is a feature: numeric if all its cells parse as numbers and
/// it is not listed in `options.categorical`, categorical otherwise.
pub fn load_csv_problem(path: &Path, targets: &[TargetColumn], options: &TabularOptions) -> Result<TabularProblem> {
    let display = path.display().to_string();
    let fail = |message: String| Error::Csv {
        path: display.clone(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| fail(e.to_string()))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| fail(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.iter().all(String::is_empty) {
        return Err(fail("empty file".into()));
    }
    let column_of = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| fail(format!("missing column '{name}'")))
    };
    let target_idx = targets
        .iter()
        .map(|t| column_of(&t.column))
        .collect::<Result<Vec<_>>>()?;
    for name in &options.categorical {
        column_of(name)?;
    }

    let mut cells: Vec<Vec<String>> = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(|e| fail(e.to_string()))?;
        // header is line 1
        let line = record.position().map_or(n as u64 + 2, |p| p.line());
        if record.len() != headers.len() {
            return Err(fail(format!(
                "row {line}: expected {} cells, found {}",
                headers.len(),
                record.len()
            )));
        }
        cells.push(record.iter().map(|c| c.trim().to_string()).collect());
    }
    if cells.is_empty() {
        return Err(fail("empty file: no data rows".into()));
    }
    let line_of = |row: usize| row + 2;

    let mut target_values = Vec::with_capacity(targets.len());
    for (t, &col) in targets.iter().zip(&target_idx) {
        let mut values = Vec::with_capacity(cells.len());
        for (row, rec) in cells.iter().enumerate() {
            let v: f64 = rec[col].parse().map_err(|_| {
                fail(format!(
                    "row {}, column '{}': cannot parse '{}' as a number",
                    line_of(row),
                    t.column,
                    rec[col]
                ))
            })?;
            let in_range = match t.objective {
                ObjectiveKind::Mse => v.is_finite(),
                ObjectiveKind::Bce => (0.0..=1.0).contains(&v),
            };
            if !in_range {
                return Err(fail(format!(
                    "row {}, column '{}': value {v} is invalid for {:?}",
                    line_of(row),
                    t.column,
                    t.objective
                )));
            }
            values.push(v);
        }
        target_values.push(values);
    }

    let mut numeric_names = Vec::new();
    let mut numeric_cols: Vec<Vec<f64>> = Vec::new();
    let mut categorical_names = Vec::new();
    let mut categorical = Vec::new();
    let mut cardinalities = Vec::new();
    for (col, name) in headers.iter().enumerate() {
        if target_idx.contains(&col) {
            continue;
        }
        let parsed: Option<Vec<f64>> = if options.categorical.contains(name) {
            None
        } else {
            cells
                .iter()
                .map(|rec| rec[col].parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect()
        };
        match parsed {
            Some(values) => {
                numeric_names.push(name.clone());
                numeric_cols.push(values);
            }
            None => {
                let levels: BTreeMap<&str, usize> = cells
                    .iter()
                    .map(|rec| (rec[col].as_str(), 0))
                    .collect::<BTreeMap<_, _>>()
                    .into_keys()
                    .enumerate()
                    .map(|(i, k)| (k, i))
                    .collect();
                categorical_names.push(name.clone());
                cardinalities.push(levels.len());
                categorical.push(cells.iter().map(|rec| levels[rec[col].as_str()]).collect());
            }
        }
    }
    let numeric = (0..cells.len())
        .map(|i| numeric_cols.iter().map(|c| c[i]).collect())
        .collect();

    let mut dataset = Dataset {
        numeric_names,
        numeric,
        categorical_names,
        categorical,
        cardinalities,
        target_names: targets.iter().map(|t| t.column.clone()).collect(),
        targets: target_values,
        splits: SplitIndices::shuffled(cells.len(), options.split_seed),
    };
    dataset.standardize();
    let name = path
        .file_stem()
        .map_or_else(|| "csv".to_string(), |s| s.to_string_lossy().into_owned());
    TabularProblem::new(
        name,
        dataset,
        targets.iter().map(|t| t.objective).collect(),
        options.hidden.clone(),
    )
}

/// Synthetic multi-output regression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n: usize,
    pub input_dim: usize,
    pub tasks: usize,
    /// Standard deviation of the Gaussian target noise.
    pub noise: f64,
    /// Hidden widths shared by the ground-truth and the target network.
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    pub seed: u64,
}

/// Targets are a fixed random relu network of the inputs plus Gaussian noise,
/// so the target architecture can represent them exactly.
pub fn synth_regression(spec: &SynthSpec) -> Result<TabularProblem> {
    if spec.tasks < 2 {
        return Err(Error::invalid("synthetic regression needs at least two tasks"));
    }
    if spec.n == 0 || spec.input_dim == 0 {
        return Err(Error::invalid("synthetic regression needs rows and inputs"));
    }
    if !(spec.noise >= 0.0 && spec.noise.is_finite()) {
        return Err(Error::invalid("noise must be a finite non-negative number"));
    }
    let truth_spec = TargetSpec::Mlp(MlpSpec {
        input_dim: spec.input_dim,
        hidden: spec.hidden.clone(),
        head_dims: vec![spec.tasks],
        embeddings: vec![],
    });
    truth_spec.validate()?;
    let truth: ParamVector = truth_spec.init_params(spec.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed_da7a);
    let numeric: Vec<Vec<f64>> = (0..spec.n)
        .map(|_| (0..spec.input_dim).map(|_| rng.sample(StandardNormal)).collect())
        .collect();

    let mut tape = Tape::new();
    let nodes = truth.to_leaves(&mut tape);
    let flat: Vec<f64> = numeric.iter().flatten().copied().collect();
    let input = TargetInput {
        numeric: Tensor::new(vec![spec.n, spec.input_dim], flat)?,
        categorical: vec![],
    };
    let head = truth_spec.forward(&mut tape, &nodes, Some(&input))?[0];
    let clean = tape.value(head).data();
    let targets = (0..spec.tasks)
        .map(|j| {
            (0..spec.n)
                .map(|i| {
                    let e: f64 = rng.sample(StandardNormal);
                    clean[i * spec.tasks + j] + spec.noise * e
                })
                .collect()
        })
        .collect();

    // inputs are already standard normal; left unscaled so the truth stays exact
    let dataset = Dataset {
        numeric_names: (0..spec.input_dim).map(|i| format!("x{i}")).collect(),
        numeric,
        categorical_names: vec![],
        categorical: vec![],
        cardinalities: vec![],
        target_names: (0..spec.tasks).map(|j| format!("y{j}")).collect(),
        targets,
        splits: SplitIndices::shuffled(spec.n, spec.seed),
    };
    TabularProblem::new(
        "synth-regression".into(),
        dataset,
        vec![ObjectiveKind::Mse; spec.tasks],
        spec.hidden.clone(),
    )
}

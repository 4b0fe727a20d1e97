use std::io::Write;

use rayon::prelude::*;

use crate::autodiff::Tape;
use crate::error::{Error, Result};
use crate::metrics::{hypervolume, uniformity};
use crate::moo::PreferenceVector;
use crate::networks::{HyperNetSpec, ParamVector};
use crate::problems::{Problem, Split};

/// Losses of one preference ray.
#[derive(Clone, Debug, PartialEq)]
pub struct FrontRow {
    pub ray: PreferenceVector,
    pub losses: Vec<f64>,
    pub uniformity: f64,
}

/// A front snapshot: per-ray losses plus the hypervolume of the whole set.
#[derive(Clone, Debug, PartialEq)]
pub struct FrontReport {
    pub step: usize,
    pub wall_clock_s: f64,
    pub rows: Vec<FrontRow>,
    pub hv: f64,
}

impl FrontReport {
    pub fn from_rows(rows: Vec<FrontRow>, reference: &[f64]) -> Result<Self> {
        let points: Vec<&[f64]> = rows.iter().map(|r| r.losses.as_slice()).collect();
        let hv = hypervolume(&points, reference)?;
        Ok(Self {
            step: 0,
            wall_clock_s: 0.0,
            rows,
            hv,
        })
    }

    pub fn median_uniformity(&self) -> f64 {
        let mut u: Vec<f64> = self.rows.iter().map(|r| r.uniformity).collect();
        if u.is_empty() {
            return f64::NAN;
        }
        u.sort_by(f64::total_cmp);
        let n = u.len();
        if n % 2 == 1 {
            u[n / 2]
        } else {
            0.5 * (u[n / 2 - 1] + u[n / 2])
        }
    }
}

/// Uniformity of one evaluated point. All-zero weighted losses count as
/// perfectly aligned: `r ⊙ ℓ` is then constant.
pub fn ray_uniformity(r: &PreferenceVector, losses: &[f64]) -> Result<f64> {
    match uniformity(r, losses) {
        Err(Error::DegenerateLosses) => Ok(1.0),
        other => other,
    }
}

/// Losses of fixed target weights on every row of `split`.
pub fn evaluate_losses(problem: &dyn Problem, phi: &ParamVector, split: Split) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let nodes = phi.to_leaves(&mut tape);
    let losses = problem.losses(&mut tape, &nodes, &problem.full_batch(split))?;
    Ok(losses.iter().map(|&l| tape.value(l).item()).collect())
}

/// Evaluates `h(θ, r)` for every ray on `split`.
///
/// Rays are evaluated in parallel and merged in input order, so the report
/// does not depend on scheduling.
pub fn evaluate_front(
    theta: &ParamVector,
    spec: &HyperNetSpec,
    problem: &dyn Problem,
    rays: &[PreferenceVector],
    reference: &[f64],
    split: Split,
) -> Result<FrontReport> {
    if reference.len() != problem.num_objectives() {
        return Err(Error::Length {
            left: reference.len(),
            right: problem.num_objectives(),
        });
    }
    let rows = rays
        .par_iter()
        .map(|r| {
            let phi = spec.generate(theta, r)?;
            let losses = evaluate_losses(problem, &phi, split)?;
            let uniformity = ray_uniformity(r, &losses)?;
            Ok(FrontRow {
                ray: r.clone(),
                losses,
                uniformity,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    FrontReport::from_rows(rows, reference)
}

/// Append-only metric CSV: one line per (report, ray).
///
/// Columns: `step, wall_clock_s, ray_index, r_0.., loss_0.., uniformity, hv`.
/// Unless `record_wall_clock` is set the time column is written as 0, which
/// keeps logs from identical runs byte-identical.
pub struct MetricLog<W: Write> {
    writer: csv::Writer<W>,
    m: usize,
    record_wall_clock: bool,
}

fn io_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

impl<W: Write> MetricLog<W> {
    pub fn new(inner: W, m: usize, record_wall_clock: bool) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(inner);
        let mut header = vec!["step".to_string(), "wall_clock_s".into(), "ray_index".into()];
        header.extend((0..m).map(|j| format!("r_{j}")));
        header.extend((0..m).map(|j| format!("loss_{j}")));
        header.extend(["uniformity".into(), "hv".into()]);
        writer.write_record(&header).map_err(io_err)?;
        Ok(Self {
            writer,
            m,
            record_wall_clock,
        })
    }

    pub fn append(&mut self, report: &FrontReport) -> Result<()> {
        let time = if self.record_wall_clock {
            report.wall_clock_s
        } else {
            0.0
        };
        for (i, row) in report.rows.iter().enumerate() {
            if row.ray.len() != self.m || row.losses.len() != self.m {
                return Err(Error::Length {
                    left: row.losses.len(),
                    right: self.m,
                });
            }
            let mut rec = vec![report.step.to_string(), fmt(time), i.to_string()];
            rec.extend(row.ray.iter().map(|&v| fmt(v)));
            rec.extend(row.losses.iter().map(|&v| fmt(v)));
            rec.extend([fmt(row.uniformity), fmt(report.hv)]);
            self.writer.write_record(&rec).map_err(io_err)?;
        }
        self.writer.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W> {
        self.writer
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

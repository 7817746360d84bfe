use std::io::Write;

use crate::autodiff::Eager;
use crate::deeponet::{deeponet_eval, predict_dataset, relative_l2, DeepOnetParams, FieldSample, OperatorDataset};
use crate::error::{Error, Result};
use crate::tensor::Mat;

#[derive(Clone, Debug, PartialEq)]
pub struct EvalSummary {
    /// `(sample id, relative L² error)` per test sample.
    pub errors: Vec<(u64, f64)>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl EvalSummary {
    pub fn from_errors(errors: Vec<(u64, f64)>) -> Self {
        let n = errors.len().max(1) as f64;
        let mean = errors.iter().map(|e| e.1).sum::<f64>() / n;
        let var = errors.iter().map(|e| (e.1 - mean).powi(2)).sum::<f64>() / n;
        Self {
            errors,
            mean,
            std: var.sqrt(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "sample_id,relative_l2")?;
        for (id, e) in &self.errors {
            writeln!(w, "{id},{e:.16e}")?;
        }
        Ok(())
    }
}

/// Per-sample relative L² errors of `pred` against the dataset targets.
pub fn summarize(ds: &OperatorDataset, pred: &[f64]) -> Result<EvalSummary> {
    let truth = ds.targets().ok_or(Error::MissingTarget { row: 0 })?;
    if pred.len() != truth.len() {
        return Err(Error::shape("prediction and dataset lengths differ"));
    }
    let mut errors = Vec::with_capacity(ds.n());
    for s in 0..ds.n() {
        let r = ds.sample_rows(s);
        errors.push((ds.ids()[s], relative_l2(&pred[r.clone()], &truth[r])?));
    }
    Ok(EvalSummary::from_errors(errors))
}

pub fn evaluate(params: &DeepOnetParams, test: &OperatorDataset) -> Result<EvalSummary> {
    summarize(test, &predict_dataset(params, test)?)
}

/// Predictions on a product grid; `values[i * a1.len() + j]` is at `(a0[i], a1[j])`.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionGrid {
    pub axes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl PredictionGrid {
    /// Long-format CSV, one grid point per line in row-major order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let names: Vec<String> = (0..self.axes.len()).map(|k| format!("y{k}")).collect();
        writeln!(w, "{},value", names.join(","))?;
        let inner = self.axes.get(1).map_or(1, Vec::len);
        for (k, v) in self.values.iter().enumerate() {
            let (i, j) = (k / inner, k % inner);
            match self.axes.len() {
                1 => writeln!(w, "{:.16e},{v:.16e}", self.axes[0][i])?,
                _ => writeln!(w, "{:.16e},{:.16e},{v:.16e}", self.axes[0][i], self.axes[1][j])?,
            }
        }
        Ok(())
    }
}

/// `G(u)` over the product of `axes` (one axis per query dimension).
pub fn predict(params: &DeepOnetParams, u: &FieldSample, axes: &[Vec<f64>]) -> Result<PredictionGrid> {
    if axes.len() != params.d() || u.values.len() != params.m() {
        return Err(Error::shape(format!(
            "model expects m = {}, d = {}; got {} inputs and {} axes",
            params.m(),
            params.d(),
            u.values.len(),
            axes.len()
        )));
    }
    let y = match axes.len() {
        1 => Mat::column(&axes[0]),
        2 => super::data::grid2(&axes[0], &axes[1]),
        _ => return Err(Error::shape("prediction grids have one or two axes")),
    };
    let branch = Mat::from_fn(1, u.values.len(), |_, j| u.values[j]);
    let b = params.branch_features(&mut Eager, &branch);
    let mut values = Vec::with_capacity(y.rows());
    for start in (0..y.rows()).step_by(2048) {
        let n = (y.rows() - start).min(2048);
        let yc = Mat::from_fn(n, y.cols(), |i, c| y.get(start + i, c));
        let bc = Mat::from_fn(n, b.cols(), |_, k| b.get(0, k));
        let t = params.trunk.forward(&mut Eager, "trunk", &yc);
        values.extend(t.zip_map(&bc, |a, c| a * c).row_sums().into_vec());
    }
    Ok(PredictionGrid {
        axes: axes.to_vec(),
        values,
    })
}

/// Mean radius of the model's zero level set, found by bisection along
/// `rays` equally spaced directions between radii `lo` and `hi`.
pub fn recover_radius(params: &DeepOnetParams, curve: &FieldSample, rays: usize, lo: f64, hi: f64) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..rays {
        let th = std::f64::consts::TAU * k as f64 / rays as f64;
        let (c, s) = (th.cos(), th.sin());
        let g = |r: f64| deeponet_eval(params, &curve.values, &[r * c, r * s]);
        let (mut a, mut b) = (lo, hi);
        let (ga, gb) = (g(a)?, g(b)?);
        if ga.signum() == gb.signum() {
            return Err(Error::Solver(format!("no sign change along ray {k} in [{lo}, {hi}]")));
        }
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            if g(mid)?.signum() == ga.signum() {
                a = mid;
            } else {
                b = mid;
            }
        }
        total += 0.5 * (a + b);
    }
    Ok(total / rays as f64)
}

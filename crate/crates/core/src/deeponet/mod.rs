//! The operator model, its dataset layout and evaluation metrics.

mod data;
mod model;

pub use data::{assemble_dataset, relative_l2, FieldSample, OperatorDataset, QueryPoint, Row, Rows};
pub use model::{deeponet_eval, DeepOnetParams};

use crate::autodiff::Eager;
use crate::error::{Error, Result};

/// Rows evaluated per forward pass when sweeping whole datasets.
const CHUNK: usize = 2048;

/// Predictions for every dataset row, in row order.
pub fn predict_dataset(params: &DeepOnetParams, ds: &OperatorDataset) -> Result<Vec<f64>> {
    params.validate()?;
    if ds.m() != params.m() || ds.d() != params.d() {
        return Err(Error::shape(format!(
            "model expects m = {}, d = {} but dataset has m = {}, d = {}",
            params.m(),
            params.d(),
            ds.m(),
            ds.d()
        )));
    }
    let mut out = Vec::with_capacity(ds.len());
    let idx: Vec<usize> = (0..ds.len()).collect();
    for chunk in idx.chunks(CHUNK) {
        let rows = ds.gather(chunk);
        out.extend(params.forward(&mut Eager, &rows.u, &rows.y).into_vec());
    }
    Ok(out)
}

/// Mean squared error over all `N·P` rows.
pub fn operator_loss(params: &DeepOnetParams, ds: &OperatorDataset) -> Result<f64> {
    let targets = ds.targets().ok_or(Error::MissingTarget { row: 0 })?;
    if ds.is_empty() {
        return Err(Error::invalid("operator loss of an empty dataset"));
    }
    let pred = predict_dataset(params, ds)?;
    let sum: f64 = pred.iter().zip(targets).map(|(p, t)| (p - t).powi(2)).sum();
    Ok(sum / ds.len() as f64)
}

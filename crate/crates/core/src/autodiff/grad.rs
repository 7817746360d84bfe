use std::collections::BTreeMap;

use super::tape::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Mat;

/// Anything that owns named trainable tensors.
pub trait Parameterized {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Mat));
    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Mat));

    fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        self.visit_params(&mut |n, _| names.push(n.to_string()));
        names
    }

    fn num_scalars(&self) -> usize {
        let mut n = 0;
        self.visit_params(&mut |_, m| n += m.len());
        n
    }
}

/// A free-standing collection of named tensors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet(pub BTreeMap<String, Mat>);

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: Mat) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn scalar(name: &str, value: f64) -> Self {
        Self::new().with(name, Mat::scalar(value))
    }

    pub fn get(&self, name: &str) -> Option<&Mat> {
        self.0.get(name)
    }
}

impl Parameterized for ParamSet {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Mat)) {
        for (k, v) in &self.0 {
            f(k, v);
        }
    }
    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Mat)) {
        for (k, v) in self.0.iter_mut() {
            f(k, v);
        }
    }
}

/// Partial derivatives keyed by parameter name; keys always cover the
/// whole parameter collection (unused parameters get zeros).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GradientVector {
    pub entries: BTreeMap<String, Mat>,
}

impl GradientVector {
    pub fn get(&self, name: &str) -> Option<&Mat> {
        self.entries.get(name)
    }

    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.entries.get(name).map(Mat::item)
    }

    pub fn keys(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Mat)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `a * self + b * other`, key by key.
    pub fn axpby(&self, a: f64, other: &GradientVector, b: f64) -> GradientVector {
        let entries = self
            .entries
            .iter()
            .map(|(k, m)| {
                let o = &other.entries[k];
                (k.clone(), m.zip_map(o, |x, y| a * x + b * y))
            })
            .collect();
        GradientVector { entries }
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.entries
            .values()
            .flat_map(|m| m.as_slice().iter().copied())
            .collect()
    }
}

/// Registers every parameter of `params` on `tape` so that gradients cover the full set.
pub fn register_params<P: Parameterized + ?Sized>(tape: &mut Tape, params: &P) {
    params.visit_params(&mut |name, value| {
        tape.param(name, value);
    });
}

/// Collects parameter gradients after a backward sweep from `output`.
pub fn collect_gradients(tape: &Tape, output: Var) -> Result<GradientVector> {
    let adj = tape.backward(output)?;
    let mut entries = BTreeMap::new();
    for (name, &v) in tape.params() {
        let g = match adj.get(v) {
            Some(g) => g.clone(),
            None => {
                let (r, c) = tape.value(v).shape();
                Mat::zeros(r, c)
            }
        };
        if !g.is_finite() {
            return Err(Error::NonFiniteGradient { name: name.clone() });
        }
        entries.insert(name.clone(), g);
    }
    Ok(GradientVector { entries })
}

/// Value and parameter gradient of a scalar function recorded by `f`.
///
/// `f` reads parameters through [`Tape::param`] (or a network forward
/// pass on the tape); the returned `Var` must be `1 x 1`.
pub fn reverse_grad<P, F>(params: &P, f: F) -> Result<(f64, GradientVector)>
where
    P: Parameterized + ?Sized,
    F: FnOnce(&mut Tape) -> Var,
{
    let mut tape = Tape::new();
    register_params(&mut tape, params);
    let out = f(&mut tape);
    let value = tape.value(out);
    if value.len() != 1 {
        return Err(Error::shape(format!(
            "reverse_grad needs a scalar output, got {:?}",
            value.shape()
        )));
    }
    let value = value.item();
    let grads = collect_gradients(&tape, out)?;
    Ok((value, grads))
}

/// Gradient of the mean squared residual, where `residual` is built with a
/// [`Jet`](super::Jet) over the tape so it may contain input derivatives.
/// Returns `(mean residual², gradient)`.
pub fn grad_of_residual<P, F>(params: &P, residual: F) -> Result<(f64, GradientVector)>
where
    P: Parameterized + ?Sized,
    F: FnOnce(&mut Tape) -> Var,
{
    reverse_grad(params, |tape| {
        let r = residual(tape);
        let sq = tape.mul(r, r);
        tape.mean(sq)
    })
}

use std::collections::BTreeMap;

use crate::autodiff::{GradientVector, Parameterized};
use crate::error::{Error, Result};
use crate::tensor::Mat;

/// `base_lr · 0.9^(iter / 1000)` with a continuous exponent.
pub fn learning_rate(base_lr: f64, iter: u64) -> f64 {
    base_lr * 0.9_f64.powf(iter as f64 / 1000.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: BTreeMap<String, Mat>,
    pub v: BTreeMap<String, Mat>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub base_lr: f64,
}

impl AdamState {
    pub fn new<P: Parameterized + ?Sized>(params: &P, base_lr: f64) -> Self {
        let mut m = BTreeMap::new();
        params.visit_params(&mut |name, value| {
            m.insert(name.to_string(), Mat::zeros(value.rows(), value.cols()));
        });
        Self {
            v: m.clone(),
            m,
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            base_lr,
        }
    }

    pub fn lr(&self, iter: u64) -> f64 {
        learning_rate(self.base_lr, iter)
    }

    /// One in-place update. Nothing is modified if any gradient is
    /// non-finite or missing.
    pub fn update<P: Parameterized + ?Sized>(
        &mut self,
        params: &mut P,
        grads: &GradientVector,
        iter: u64,
    ) -> Result<()> {
        for (name, g) in grads.iter() {
            if !g.is_finite() {
                return Err(Error::NonFiniteGradient { name: name.clone() });
            }
        }
        let mut problem = None;
        params.visit_params(&mut |name, value| {
            if problem.is_some() {
                return;
            }
            match (grads.get(name), self.m.get(name)) {
                (Some(g), Some(m)) if g.shape() == value.shape() && m.shape() == value.shape() => {}
                (None, _) => problem = Some(format!("no gradient for `{name}`")),
                (_, None) => problem = Some(format!("no moment estimates for `{name}`")),
                _ => problem = Some(format!("shape mismatch for `{name}`")),
            }
        });
        if let Some(p) = problem {
            return Err(Error::shape(p));
        }

        self.step += 1;
        let t = self.step as i32;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        let lr = self.lr(iter);
        let (ms, vs) = (&mut self.m, &mut self.v);
        params.visit_params_mut(&mut |name, value| {
            let g = grads.get(name).expect("checked above");
            let m = ms.get_mut(name).expect("checked above");
            let v = vs.get_mut(name).expect("checked above");
            let p = value.as_mut_slice();
            let (m, v) = (m.as_mut_slice(), v.as_mut_slice());
            for (i, &gi) in g.as_slice().iter().enumerate() {
                m[i] = b1 * m[i] + (1.0 - b1) * gi;
                v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
                let mhat = m[i] / c1;
                let vhat = v[i] / c2;
                p[i] -= lr * mhat / (vhat.sqrt() + eps);
            }
        });
        Ok(())
    }
}

/// Functional form of [`AdamState::update`]: returns the new parameters and state.
pub fn adam_step<P: Parameterized + Clone>(
    state: &AdamState,
    params: &P,
    grads: &GradientVector,
    iter: u64,
) -> Result<(P, AdamState)> {
    let mut p = params.clone();
    let mut s = state.clone();
    s.update(&mut p, grads, iter)?;
    Ok((p, s))
}

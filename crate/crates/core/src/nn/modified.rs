//! Gated MLP with two encoder streams.
//!
//! ```text
//! U = φ(X W_u + b_u)        V = φ(X W_v + b_v)
//! H¹ = φ(X W_e + b_e)
//! Zᵏ = φ(Hᵏ W_k + b_k)      Hᵏ⁺¹ = (1 − Zᵏ) ⊙ U + Zᵏ ⊙ V     k = 1..L
//! f(X) = Hᴸ⁺¹ W + b
//! ```

use rand::Rng;

use super::mlp::{Activation, Dense};
use crate::autodiff::{Backend, Eager};
use crate::error::{Error, Result};
use crate::tensor::Mat;

#[derive(Clone, Debug, PartialEq)]
pub struct ModifiedMlpParams {
    pub u_gate: Dense,
    pub v_gate: Dense,
    /// Entry layer (in -> width) followed by the L gate layers (width -> width).
    pub hidden: Vec<Dense>,
    pub head: Dense,
    pub activation: Activation,
}

impl ModifiedMlpParams {
    /// `gates` is L, the number of gating layers (at least 1).
    pub fn init<R: Rng + ?Sized>(
        in_dim: usize,
        width: usize,
        gates: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        assert!(gates >= 1, "modified MLP needs at least one gate layer");
        let u_gate = Dense::glorot(in_dim, width, rng);
        let v_gate = Dense::glorot(in_dim, width, rng);
        let mut hidden = vec![Dense::glorot(in_dim, width, rng)];
        for _ in 0..gates {
            hidden.push(Dense::glorot(width, width, rng));
        }
        let head = Dense::glorot(width, out_dim, rng);
        Self {
            u_gate,
            v_gate,
            hidden,
            head,
            activation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_dim = self.u_gate.in_dim();
        let width = self.u_gate.out_dim();
        if self.hidden.len() < 2 {
            return Err(Error::shape("modified MLP needs an entry layer and a gate"));
        }
        let entry = &self.hidden[0];
        let checks = [
            (self.v_gate.in_dim() == in_dim && self.v_gate.out_dim() == width, "V stream"),
            (entry.in_dim() == in_dim && entry.out_dim() == width, "entry layer"),
            (self.head.in_dim() == width, "head"),
        ];
        for (ok, what) in checks {
            if !ok {
                return Err(Error::shape(format!("modified MLP {what} width mismatch")));
            }
        }
        for (k, g) in self.hidden[1..].iter().enumerate() {
            if g.in_dim() != width || g.out_dim() != width {
                return Err(Error::shape(format!(
                    "gate {k} is {}x{} but all hidden widths must be {width}",
                    g.in_dim(),
                    g.out_dim()
                )));
            }
        }
        Ok(())
    }

    pub fn in_dim(&self) -> usize {
        self.u_gate.in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.head.out_dim()
    }

    pub fn width(&self) -> usize {
        self.u_gate.out_dim()
    }

    pub fn gates(&self) -> usize {
        self.hidden.len() - 1
    }

    pub fn forward<B: Backend>(&self, be: &mut B, prefix: &str, x: &B::T) -> B::T {
        let act = self.activation.unary();
        let u = self.u_gate.apply(be, &format!("{prefix}.u"), x);
        let u = be.unary(&u, act);
        let v = self.v_gate.apply(be, &format!("{prefix}.v"), x);
        let v = be.unary(&v, act);
        let h = self.hidden[0].apply(be, &format!("{prefix}.h0"), x);
        let mut h = be.unary(&h, act);
        // (1 - Z) ⊙ U + Z ⊙ V = U + Z ⊙ (V - U)
        let v_minus_u = be.sub(&v, &u);
        for (k, gate) in self.hidden.iter().enumerate().skip(1) {
            let z = gate.apply(be, &format!("{prefix}.h{k}"), &h);
            let z = be.unary(&z, act);
            let zd = be.mul(&z, &v_minus_u);
            h = be.add(&u, &zd);
        }
        self.head.apply(be, &format!("{prefix}.head"), &h)
    }

    pub(crate) fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Mat)) {
        self.u_gate.visit(&format!("{prefix}.u"), f);
        self.v_gate.visit(&format!("{prefix}.v"), f);
        for (k, l) in self.hidden.iter().enumerate() {
            l.visit(&format!("{prefix}.h{k}"), f);
        }
        self.head.visit(&format!("{prefix}.head"), f);
    }

    pub(crate) fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Mat)) {
        self.u_gate.visit_mut(&format!("{prefix}.u"), f);
        self.v_gate.visit_mut(&format!("{prefix}.v"), f);
        for (k, l) in self.hidden.iter_mut().enumerate() {
            l.visit_mut(&format!("{prefix}.h{k}"), f);
        }
        self.head.visit_mut(&format!("{prefix}.head"), f);
    }
}

pub fn modified_mlp_forward(params: &ModifiedMlpParams, x: &[f64]) -> Result<Vec<f64>> {
    params.validate()?;
    if x.len() != params.in_dim() {
        return Err(Error::shape(format!(
            "input has length {} but the network expects {}",
            x.len(),
            params.in_dim()
        )));
    }
    Ok(params.forward(&mut Eager, "mmlp", &Mat::row(x)).into_vec())
}

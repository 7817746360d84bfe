//! Reverse-mode tape over matrix-valued nodes.
//!
//! Nodes are appended in evaluation order, so operands always precede the
//! node that consumes them and a single backward pass over the node list
//! in reverse is a valid reverse topological sweep.

use std::collections::BTreeMap;

use super::unary::Unary;
use crate::error::{Error, Result};
use crate::tensor::Mat;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Op {
    Leaf,
    Constant,
    MatMul(Var, Var),
    AddRow(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    Scale(Var, f64),
    AddScalar(Var, f64),
    Unary(Var, Unary),
    RowSum(Var),
    Sum(Var),
    Mean(Var),
    HCat(Var, Var),
    ColBlock(Var, usize, usize),
}

impl Op {
    fn operands(&self) -> [Option<Var>; 2] {
        match *self {
            Op::Leaf | Op::Constant => [None, None],
            Op::MatMul(a, b)
            | Op::AddRow(a, b)
            | Op::Add(a, b)
            | Op::Sub(a, b)
            | Op::Mul(a, b)
            | Op::Div(a, b)
            | Op::HCat(a, b) => [Some(a), Some(b)],
            Op::Scale(a, _)
            | Op::AddScalar(a, _)
            | Op::Unary(a, _)
            | Op::RowSum(a)
            | Op::Sum(a)
            | Op::Mean(a)
            | Op::ColBlock(a, _, _) => [Some(a), None],
        }
    }
}

struct Node {
    op: Op,
    value: Mat,
    needs_grad: bool,
}

/// Records one evaluation. Rebuilt per batch; never shared while recording.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: BTreeMap<String, Var>,
}

/// Adjoints of every node after a backward sweep.
pub struct Adjoints {
    grads: Vec<Option<Mat>>,
}

impl Adjoints {
    pub fn get(&self, v: Var) -> Option<&Mat> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }
}

fn shape_check(op: &Op, values: &dyn Fn(Var) -> (usize, usize)) -> std::result::Result<(), String> {
    let same = |a: Var, b: Var| {
        if values(a) == values(b) {
            Ok(())
        } else {
            Err(format!("{:?} vs {:?} in {op:?}", values(a), values(b)))
        }
    };
    match *op {
        Op::MatMul(a, b) => {
            if values(a).1 == values(b).0 {
                Ok(())
            } else {
                Err(format!("matmul {:?} x {:?}", values(a), values(b)))
            }
        }
        Op::AddRow(a, b) => {
            let (sa, sb) = (values(a), values(b));
            if sb.0 == 1 && sb.1 == sa.1 {
                Ok(())
            } else {
                Err(format!("bias {sb:?} for {sa:?}"))
            }
        }
        Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::Div(a, b) => same(a, b),
        Op::HCat(a, b) => {
            if values(a).0 == values(b).0 {
                Ok(())
            } else {
                Err("hcat row mismatch".into())
            }
        }
        Op::ColBlock(a, s, w) => {
            if s + w <= values(a).1 {
                Ok(())
            } else {
                Err("column block out of range".into())
            }
        }
        _ => Ok(()),
    }
}

fn eval_op<'a>(op: &Op, value: impl Fn(Var) -> &'a Mat) -> Mat {
    match *op {
        Op::Leaf | Op::Constant => unreachable!("leaves carry their own values"),
        Op::MatMul(a, b) => value(a).matmul(value(b)),
        Op::AddRow(a, b) => value(a).add_row(value(b)),
        Op::Add(a, b) => value(a).zip_map(value(b), |x, y| x + y),
        Op::Sub(a, b) => value(a).zip_map(value(b), |x, y| x - y),
        Op::Mul(a, b) => value(a).zip_map(value(b), |x, y| x * y),
        Op::Div(a, b) => value(a).zip_map(value(b), |x, y| x / y),
        Op::Scale(a, c) => value(a).map(|x| x * c),
        Op::AddScalar(a, c) => value(a).map(|x| x + c),
        Op::Unary(a, u) => value(a).map(|x| u.eval(x)),
        Op::RowSum(a) => value(a).row_sums(),
        Op::Sum(a) => Mat::scalar(value(a).sum()),
        Op::Mean(a) => {
            let m = value(a);
            Mat::scalar(m.sum() / m.len() as f64)
        }
        Op::HCat(a, b) => value(a).hcat(value(b)),
        Op::ColBlock(a, s, w) => value(a).col_block(s, w),
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Mat {
        &self.nodes[v.0].value
    }

    fn push_raw(&mut self, op: Op, value: Mat, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            op,
            value,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// A differentiable leaf that is not a named parameter.
    pub fn leaf(&mut self, value: Mat) -> Var {
        self.push_raw(Op::Leaf, value, true)
    }

    pub fn constant(&mut self, value: Mat) -> Var {
        self.push_raw(Op::Constant, value, false)
    }

    /// Named parameter leaf; repeated calls with the same name return the same node.
    pub fn param(&mut self, name: &str, value: &Mat) -> Var {
        if let Some(&v) = self.params.get(name) {
            return v;
        }
        let v = self.leaf(value.clone());
        self.params.insert(name.to_string(), v);
        v
    }

    pub fn params(&self) -> &BTreeMap<String, Var> {
        &self.params
    }

    /// Shape-checks and records a non-leaf operation.
    pub(crate) fn push(&mut self, op: Op) -> Var {
        let nodes = &self.nodes;
        if let Err(msg) = shape_check(&op, &|v: Var| nodes[v.0].value.shape()) {
            panic!("tape shape error: {msg}");
        }
        let value = eval_op(&op, |v: Var| &nodes[v.0].value);
        let needs_grad = op
            .operands()
            .iter()
            .flatten()
            .any(|v| self.nodes[v.0].needs_grad);
        self.push_raw(op, value, needs_grad)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        self.push(Op::MatMul(a, b))
    }
    pub fn add_row(&mut self, a: Var, bias: Var) -> Var {
        self.push(Op::AddRow(a, bias))
    }
    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.push(Op::Add(a, b))
    }
    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.push(Op::Sub(a, b))
    }
    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.push(Op::Mul(a, b))
    }
    pub fn div(&mut self, a: Var, b: Var) -> Var {
        self.push(Op::Div(a, b))
    }
    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.push(Op::Scale(a, c))
    }
    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        self.push(Op::AddScalar(a, c))
    }
    pub fn unary(&mut self, a: Var, u: Unary) -> Var {
        self.push(Op::Unary(a, u))
    }
    pub fn row_sum(&mut self, a: Var) -> Var {
        self.push(Op::RowSum(a))
    }
    pub fn sum(&mut self, a: Var) -> Var {
        self.push(Op::Sum(a))
    }
    pub fn mean(&mut self, a: Var) -> Var {
        self.push(Op::Mean(a))
    }
    pub fn hcat(&mut self, a: Var, b: Var) -> Var {
        self.push(Op::HCat(a, b))
    }
    pub fn col_block(&mut self, a: Var, start: usize, width: usize) -> Var {
        self.push(Op::ColBlock(a, start, width))
    }

    /// Re-evaluates every node from the recorded leaves and constants.
    pub fn replay(&self) -> Vec<Mat> {
        let mut values: Vec<Mat> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = match node.op {
                Op::Leaf | Op::Constant => node.value.clone(),
                ref op => eval_op(op, |v: Var| &values[v.0]),
            };
            values.push(v);
        }
        values
    }

    /// Reverse sweep seeded with ones at `output` (the gradient of the sum of its entries).
    pub fn backward(&self, output: Var) -> Result<Adjoints> {
        let mut grads: Vec<Option<Mat>> = vec![None; output.0 + 1];
        let seed_shape = self.nodes[output.0].value.shape();
        grads[output.0] = Some(Mat::filled(seed_shape.0, seed_shape.1, 1.0));

        for i in (0..=output.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.value.is_finite() || !g.is_finite() {
                return Err(Error::NonFiniteNode { node: i });
            }
            self.propagate(&node.op, &node.value, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(Adjoints { grads })
    }

    fn propagate(&self, op: &Op, out: &Mat, g: &Mat, grads: &mut [Option<Mat>]) {
        let val = |v: Var| &self.nodes[v.0].value;
        let wants = |v: Var| self.nodes[v.0].needs_grad;
        let mut acc = |v: Var, d: Mat| match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&d),
            slot @ None => *slot = Some(d),
        };
        match *op {
            Op::Leaf | Op::Constant => {}
            Op::MatMul(a, b) => {
                if wants(a) {
                    acc(a, g.matmul_bt(val(b)));
                }
                if wants(b) {
                    acc(b, val(a).matmul_at(g));
                }
            }
            Op::AddRow(a, b) => {
                if wants(b) {
                    acc(b, g.col_sums());
                }
                if wants(a) {
                    acc(a, g.clone());
                }
            }
            Op::Add(a, b) => {
                if wants(a) {
                    acc(a, g.clone());
                }
                if wants(b) {
                    acc(b, g.clone());
                }
            }
            Op::Sub(a, b) => {
                if wants(a) {
                    acc(a, g.clone());
                }
                if wants(b) {
                    acc(b, g.map(|x| -x));
                }
            }
            Op::Mul(a, b) => {
                if wants(a) {
                    acc(a, g.zip_map(val(b), |x, y| x * y));
                }
                if wants(b) {
                    acc(b, g.zip_map(val(a), |x, y| x * y));
                }
            }
            Op::Div(a, b) => {
                if wants(a) {
                    acc(a, g.zip_map(val(b), |x, y| x / y));
                }
                if wants(b) {
                    // d(a/b)/db = -out / b
                    let t = out.zip_map(val(b), |o, y| -o / y);
                    acc(b, g.zip_map(&t, |x, y| x * y));
                }
            }
            Op::Scale(a, c) => {
                if wants(a) {
                    acc(a, g.map(|x| x * c));
                }
            }
            Op::AddScalar(a, _) => {
                if wants(a) {
                    acc(a, g.clone());
                }
            }
            Op::Unary(a, u) => {
                if wants(a) {
                    let x = val(a);
                    let mut d = x.zip_map(out, |xi, yi| u.deriv(xi, yi));
                    for (di, gi) in d.as_mut_slice().iter_mut().zip(g.as_slice()) {
                        *di *= gi;
                    }
                    acc(a, d);
                }
            }
            Op::RowSum(a) => {
                if wants(a) {
                    acc(a, g.broadcast_cols(val(a).cols()));
                }
            }
            Op::Sum(a) => {
                if wants(a) {
                    let (r, c) = val(a).shape();
                    acc(a, Mat::filled(r, c, g.item()));
                }
            }
            Op::Mean(a) => {
                if wants(a) {
                    let (r, c) = val(a).shape();
                    acc(a, Mat::filled(r, c, g.item() / (r * c) as f64));
                }
            }
            Op::HCat(a, b) => {
                let ca = val(a).cols();
                if wants(a) {
                    acc(a, g.col_block(0, ca));
                }
                if wants(b) {
                    acc(b, g.col_block(ca, val(b).cols()));
                }
            }
            Op::ColBlock(a, s, w) => {
                if wants(a) {
                    let (r, c) = val(a).shape();
                    let mut d = Mat::zeros(r, c);
                    for i in 0..r {
                        for j in 0..w {
                            d.set(i, s + j, g.get(i, j));
                        }
                    }
                    acc(a, d);
                }
            }
        }
    }
}

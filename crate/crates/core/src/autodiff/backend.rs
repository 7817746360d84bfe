//! Evaluation backends shared by every network and loss.
//!
//! Networks are written once against [`Backend`]. Running them on
//! [`Eager`] computes plain values, on [`Tape`] records a reverse-mode
//! graph, and on [`Jet`] propagates first and second directional input
//! derivatives through whatever backend it wraps. `Jet<Tape>` is the
//! forward-over-reverse nesting used by every physics residual.

use super::tape::{Tape, Var};
use super::unary::Unary;
use crate::tensor::Mat;

pub trait Backend {
    type T: Clone;

    fn constant(&mut self, value: Mat) -> Self::T;
    /// A trainable tensor identified by `name`.
    fn param(&mut self, name: &str, value: &Mat) -> Self::T;
    fn value<'a>(&'a self, a: &'a Self::T) -> &'a Mat;

    fn matmul(&mut self, a: &Self::T, b: &Self::T) -> Self::T;
    /// Broadcast-adds a `1 x k` row to every row of `a`.
    fn add_row(&mut self, a: &Self::T, bias: &Self::T) -> Self::T;
    fn add(&mut self, a: &Self::T, b: &Self::T) -> Self::T;
    fn sub(&mut self, a: &Self::T, b: &Self::T) -> Self::T;
    fn mul(&mut self, a: &Self::T, b: &Self::T) -> Self::T;
    fn div(&mut self, a: &Self::T, b: &Self::T) -> Self::T;
    fn scale(&mut self, a: &Self::T, c: f64) -> Self::T;
    fn add_scalar(&mut self, a: &Self::T, c: f64) -> Self::T;
    fn unary(&mut self, a: &Self::T, u: Unary) -> Self::T;
    /// Sum over columns, giving a `rows x 1` column.
    fn row_sum(&mut self, a: &Self::T) -> Self::T;
    fn sum(&mut self, a: &Self::T) -> Self::T;
    fn mean(&mut self, a: &Self::T) -> Self::T;
    fn hcat(&mut self, a: &Self::T, b: &Self::T) -> Self::T;
    fn col_block(&mut self, a: &Self::T, start: usize, width: usize) -> Self::T;

    fn square(&mut self, a: &Self::T) -> Self::T {
        self.mul(a, a)
    }

    /// `mean(a^2)`.
    fn mean_square(&mut self, a: &Self::T) -> Self::T {
        let sq = self.square(a);
        self.mean(&sq)
    }
}

/// Direct evaluation with no bookkeeping.
#[derive(Default, Clone, Copy, Debug)]
pub struct Eager;

impl Backend for Eager {
    type T = Mat;

    fn constant(&mut self, value: Mat) -> Mat {
        value
    }
    fn param(&mut self, _name: &str, value: &Mat) -> Mat {
        value.clone()
    }
    fn value<'a>(&'a self, a: &'a Mat) -> &'a Mat {
        a
    }
    fn matmul(&mut self, a: &Mat, b: &Mat) -> Mat {
        a.matmul(b)
    }
    fn add_row(&mut self, a: &Mat, bias: &Mat) -> Mat {
        a.add_row(bias)
    }
    fn add(&mut self, a: &Mat, b: &Mat) -> Mat {
        a.zip_map(b, |x, y| x + y)
    }
    fn sub(&mut self, a: &Mat, b: &Mat) -> Mat {
        a.zip_map(b, |x, y| x - y)
    }
    fn mul(&mut self, a: &Mat, b: &Mat) -> Mat {
        a.zip_map(b, |x, y| x * y)
    }
    fn div(&mut self, a: &Mat, b: &Mat) -> Mat {
        a.zip_map(b, |x, y| x / y)
    }
    fn scale(&mut self, a: &Mat, c: f64) -> Mat {
        a.map(|x| x * c)
    }
    fn add_scalar(&mut self, a: &Mat, c: f64) -> Mat {
        a.map(|x| x + c)
    }
    fn unary(&mut self, a: &Mat, u: Unary) -> Mat {
        a.map(|x| u.eval(x))
    }
    fn row_sum(&mut self, a: &Mat) -> Mat {
        a.row_sums()
    }
    fn sum(&mut self, a: &Mat) -> Mat {
        Mat::scalar(a.sum())
    }
    fn mean(&mut self, a: &Mat) -> Mat {
        Mat::scalar(a.sum() / a.len() as f64)
    }
    fn hcat(&mut self, a: &Mat, b: &Mat) -> Mat {
        a.hcat(b)
    }
    fn col_block(&mut self, a: &Mat, start: usize, width: usize) -> Mat {
        a.col_block(start, width)
    }
}

impl Backend for Tape {
    type T = Var;

    fn constant(&mut self, value: Mat) -> Var {
        Tape::constant(self, value)
    }
    fn param(&mut self, name: &str, value: &Mat) -> Var {
        Tape::param(self, name, value)
    }
    fn value<'a>(&'a self, a: &'a Var) -> &'a Mat {
        Tape::value(self, *a)
    }
    fn matmul(&mut self, a: &Var, b: &Var) -> Var {
        Tape::matmul(self, *a, *b)
    }
    fn add_row(&mut self, a: &Var, bias: &Var) -> Var {
        Tape::add_row(self, *a, *bias)
    }
    fn add(&mut self, a: &Var, b: &Var) -> Var {
        Tape::add(self, *a, *b)
    }
    fn sub(&mut self, a: &Var, b: &Var) -> Var {
        Tape::sub(self, *a, *b)
    }
    fn mul(&mut self, a: &Var, b: &Var) -> Var {
        Tape::mul(self, *a, *b)
    }
    fn div(&mut self, a: &Var, b: &Var) -> Var {
        Tape::div(self, *a, *b)
    }
    fn scale(&mut self, a: &Var, c: f64) -> Var {
        Tape::scale(self, *a, c)
    }
    fn add_scalar(&mut self, a: &Var, c: f64) -> Var {
        Tape::add_scalar(self, *a, c)
    }
    fn unary(&mut self, a: &Var, u: Unary) -> Var {
        Tape::unary(self, *a, u)
    }
    fn row_sum(&mut self, a: &Var) -> Var {
        Tape::row_sum(self, *a)
    }
    fn sum(&mut self, a: &Var) -> Var {
        Tape::sum(self, *a)
    }
    fn mean(&mut self, a: &Var) -> Var {
        Tape::mean(self, *a)
    }
    fn hcat(&mut self, a: &Var, b: &Var) -> Var {
        Tape::hcat(self, *a, *b)
    }
    fn col_block(&mut self, a: &Var, start: usize, width: usize) -> Var {
        Tape::col_block(self, *a, start, width)
    }
}

/// Value plus first and second directional derivatives along one input
/// direction. `None` stands for an exact zero and is never materialised.
#[derive(Clone, Debug)]
pub struct DualVar<T> {
    pub v: T,
    pub d1: Option<T>,
    pub d2: Option<T>,
}

impl<T> DualVar<T> {
    pub fn constant(v: T) -> Self {
        Self {
            v,
            d1: None,
            d2: None,
        }
    }
}

/// Forward-mode wrapper over another backend.
///
/// With `second_order == false` the `d2` lane is never computed, which
/// halves the cost when only gradients are needed (Eikonal, time
/// derivatives).
pub struct Jet<'a, B: Backend> {
    inner: &'a mut B,
    second_order: bool,
}

impl<'a, B: Backend> Jet<'a, B> {
    pub fn new(inner: &'a mut B, second_order: bool) -> Self {
        Self {
            inner,
            second_order,
        }
    }

    pub fn inner(&mut self) -> &mut B {
        self.inner
    }

    /// Input coordinates `x` (rows x d) seeded along coordinate `axis`.
    pub fn seed_axis(&mut self, x: Mat, axis: usize) -> DualVar<B::T> {
        let (r, c) = x.shape();
        assert!(axis < c, "seed axis out of range");
        let dir = Mat::from_fn(r, c, |_, j| if j == axis { 1.0 } else { 0.0 });
        DualVar {
            v: self.inner.constant(x),
            d1: Some(self.inner.constant(dir)),
            d2: None,
        }
    }

    /// Lifts an inner value that does not depend on the seeded direction.
    pub fn lift(&self, v: B::T) -> DualVar<B::T> {
        DualVar::constant(v)
    }

    fn zeros_like(&mut self, a: &B::T) -> B::T {
        let (r, c) = self.inner.value(a).shape();
        self.inner.constant(Mat::zeros(r, c))
    }

    fn opt_add(&mut self, a: Option<B::T>, b: Option<B::T>) -> Option<B::T> {
        match (a, b) {
            (Some(a), Some(b)) => Some(self.inner.add(&a, &b)),
            (a, None) => a,
            (None, b) => b,
        }
    }

    fn opt_sum(&mut self, terms: Vec<Option<B::T>>) -> Option<B::T> {
        let mut acc = None;
        for t in terms {
            acc = self.opt_add(acc, t);
        }
        acc
    }

    fn opt_map(&mut self, a: &Option<B::T>, f: impl FnOnce(&mut B, &B::T) -> B::T) -> Option<B::T> {
        a.as_ref().map(|x| f(self.inner, x))
    }

    /// `(f(v), f'(v), f''(v))` as inner values; `None` marks identically zero.
    fn unary_derivs(&mut self, v: &B::T, u: Unary) -> (B::T, Option<B::T>, Option<B::T>) {
        let b = &mut *self.inner;
        let need2 = self.second_order;
        match u {
            Unary::Tanh => {
                let t = b.unary(v, Unary::Tanh);
                let t2 = b.square(&t);
                let neg = b.scale(&t2, -1.0);
                let f1 = b.add_scalar(&neg, 1.0);
                let f2 = need2.then(|| {
                    let p = b.mul(&t, &f1);
                    b.scale(&p, -2.0)
                });
                (t, Some(f1), f2)
            }
            Unary::Exp => {
                let e = b.unary(v, Unary::Exp);
                (e.clone(), Some(e.clone()), need2.then_some(e))
            }
            Unary::Sin => {
                let s = b.unary(v, Unary::Sin);
                let c = b.unary(v, Unary::Cos);
                let f2 = need2.then(|| b.scale(&s, -1.0));
                (s, Some(c), f2)
            }
            Unary::Cos => {
                let c = b.unary(v, Unary::Cos);
                let s = b.unary(v, Unary::Sin);
                let f1 = b.scale(&s, -1.0);
                let f2 = need2.then(|| b.scale(&c, -1.0));
                (c, Some(f1), f2)
            }
            Unary::Sqrt => {
                let r = b.unary(v, Unary::Sqrt);
                let inv = b.unary(&r, Unary::Recip);
                let f1 = b.scale(&inv, 0.5);
                let f2 = need2.then(|| {
                    let iv = b.unary(v, Unary::Recip);
                    let p = b.mul(&f1, &iv);
                    b.scale(&p, -0.5)
                });
                (r, Some(f1), f2)
            }
            Unary::Recip => {
                let r = b.unary(v, Unary::Recip);
                let r2 = b.square(&r);
                let f1 = b.scale(&r2, -1.0);
                let f2 = need2.then(|| {
                    let r3 = b.mul(&r2, &r);
                    b.scale(&r3, 2.0)
                });
                (r, Some(f1), f2)
            }
            Unary::Powi(n) => {
                let p = b.unary(v, Unary::Powi(n));
                let nf = f64::from(n);
                let f1 = match n {
                    0 => None,
                    1 => Some(b.constant(Mat::filled(
                        b.value(v).rows(),
                        b.value(v).cols(),
                        1.0,
                    ))),
                    _ => {
                        let q = b.unary(v, Unary::Powi(n - 1));
                        Some(b.scale(&q, nf))
                    }
                };
                let f2 = if !need2 || n == 0 || n == 1 {
                    None
                } else if n == 2 {
                    let (r, c) = b.value(v).shape();
                    Some(b.constant(Mat::filled(r, c, 2.0)))
                } else {
                    let q = b.unary(v, Unary::Powi(n - 2));
                    Some(b.scale(&q, nf * (nf - 1.0)))
                };
                (p, f1, f2)
            }
            Unary::Elu | Unary::EluD1 | Unary::EluD2 => {
                let y = b.unary(v, u);
                let f1 = if u == Unary::Elu {
                    b.unary(v, Unary::EluD1)
                } else {
                    b.unary(v, Unary::EluD2)
                };
                let f2 = need2.then(|| b.unary(v, Unary::EluD2));
                (y, Some(f1), f2)
            }
            Unary::Relu => {
                let y = b.unary(v, Unary::Relu);
                let f1 = b.unary(v, Unary::Step);
                (y, Some(f1), None)
            }
            Unary::Step => (b.unary(v, Unary::Step), None, None),
        }
    }
}

impl<B: Backend> Backend for Jet<'_, B> {
    type T = DualVar<B::T>;

    fn constant(&mut self, value: Mat) -> Self::T {
        DualVar::constant(self.inner.constant(value))
    }

    fn param(&mut self, name: &str, value: &Mat) -> Self::T {
        DualVar::constant(self.inner.param(name, value))
    }

    fn value<'b>(&'b self, a: &'b Self::T) -> &'b Mat {
        self.inner.value(&a.v)
    }

    fn matmul(&mut self, a: &Self::T, b: &Self::T) -> Self::T {
        let v = self.inner.matmul(&a.v, &b.v);
        let t1 = self.opt_map(&a.d1, |i, x| i.matmul(x, &b.v));
        let t2 = self.opt_map(&b.d1, |i, x| i.matmul(&a.v, x));
        let d1 = self.opt_add(t1, t2);
        let d2 = if self.second_order {
            let s1 = self.opt_map(&a.d2, |i, x| i.matmul(x, &b.v));
            let s2 = self.opt_map(&b.d2, |i, x| i.matmul(&a.v, x));
            let s3 = match (&a.d1, &b.d1) {
                (Some(x), Some(y)) => {
                    let p = self.inner.matmul(x, y);
                    Some(self.inner.scale(&p, 2.0))
                }
                _ => None,
            };
            self.opt_sum(vec![s1, s2, s3])
        } else {
            None
        };
        DualVar { v, d1, d2 }
    }

    fn add_row(&mut self, a: &Self::T, bias: &Self::T) -> Self::T {
        let v = self.inner.add_row(&a.v, &bias.v);
        let lane = |this: &mut Self, x: &Option<B::T>, y: &Option<B::T>| match (x, y) {
            (x, None) => x.clone(),
            (Some(x), Some(y)) => Some(this.inner.add_row(x, y)),
            (None, Some(y)) => {
                let z = this.zeros_like(&a.v);
                Some(this.inner.add_row(&z, y))
            }
        };
        let d1 = lane(self, &a.d1, &bias.d1);
        let d2 = if self.second_order {
            lane(self, &a.d2, &bias.d2)
        } else {
            None
        };
        DualVar { v, d1, d2 }
    }

    fn add(&mut self, a: &Self::T, b: &Self::T) -> Self::T {
        let v = self.inner.add(&a.v, &b.v);
        let d1 = self.opt_add(a.d1.clone(), b.d1.clone());
        let d2 = self.opt_add(a.d2.clone(), b.d2.clone());
        DualVar { v, d1, d2 }
    }

    fn sub(&mut self, a: &Self::T, b: &Self::T) -> Self::T {
        let nb = self.scale(b, -1.0);
        self.add(a, &nb)
    }

    fn mul(&mut self, a: &Self::T, b: &Self::T) -> Self::T {
        let v = self.inner.mul(&a.v, &b.v);
        let t1 = self.opt_map(&a.d1, |i, x| i.mul(x, &b.v));
        let t2 = self.opt_map(&b.d1, |i, x| i.mul(&a.v, x));
        let d1 = self.opt_add(t1, t2);
        let d2 = if self.second_order {
            let s1 = self.opt_map(&a.d2, |i, x| i.mul(x, &b.v));
            let s2 = self.opt_map(&b.d2, |i, x| i.mul(&a.v, x));
            let s3 = match (&a.d1, &b.d1) {
                (Some(x), Some(y)) => {
                    let p = self.inner.mul(x, y);
                    Some(self.inner.scale(&p, 2.0))
                }
                _ => None,
            };
            self.opt_sum(vec![s1, s2, s3])
        } else {
            None
        };
        DualVar { v, d1, d2 }
    }

    fn div(&mut self, a: &Self::T, b: &Self::T) -> Self::T {
        let r = self.unary(b, Unary::Recip);
        self.mul(a, &r)
    }

    fn scale(&mut self, a: &Self::T, c: f64) -> Self::T {
        DualVar {
            v: self.inner.scale(&a.v, c),
            d1: self.opt_map(&a.d1, |i, x| i.scale(x, c)),
            d2: self.opt_map(&a.d2, |i, x| i.scale(x, c)),
        }
    }

    fn add_scalar(&mut self, a: &Self::T, c: f64) -> Self::T {
        DualVar {
            v: self.inner.add_scalar(&a.v, c),
            d1: a.d1.clone(),
            d2: a.d2.clone(),
        }
    }

    fn unary(&mut self, a: &Self::T, u: Unary) -> Self::T {
        if a.d1.is_none() && a.d2.is_none() {
            return DualVar::constant(self.inner.unary(&a.v, u));
        }
        let (v, f1, f2) = self.unary_derivs(&a.v, u);
        // h' = f'(g) g'
        let d1 = match (&f1, &a.d1) {
            (Some(f1), Some(g1)) => Some(self.inner.mul(f1, g1)),
            _ => None,
        };
        // h'' = f''(g) g'^2 + f'(g) g''
        let d2 = if self.second_order {
            let curv = match (&f2, &a.d1) {
                (Some(f2), Some(g1)) => {
                    let sq = self.inner.square(g1);
                    Some(self.inner.mul(f2, &sq))
                }
                _ => None,
            };
            let lin = match (&f1, &a.d2) {
                (Some(f1), Some(g2)) => Some(self.inner.mul(f1, g2)),
                _ => None,
            };
            self.opt_add(curv, lin)
        } else {
            None
        };
        DualVar { v, d1, d2 }
    }

    fn row_sum(&mut self, a: &Self::T) -> Self::T {
        DualVar {
            v: self.inner.row_sum(&a.v),
            d1: self.opt_map(&a.d1, |i, x| i.row_sum(x)),
            d2: self.opt_map(&a.d2, |i, x| i.row_sum(x)),
        }
    }

    fn sum(&mut self, a: &Self::T) -> Self::T {
        DualVar {
            v: self.inner.sum(&a.v),
            d1: self.opt_map(&a.d1, |i, x| i.sum(x)),
            d2: self.opt_map(&a.d2, |i, x| i.sum(x)),
        }
    }

    fn mean(&mut self, a: &Self::T) -> Self::T {
        DualVar {
            v: self.inner.mean(&a.v),
            d1: self.opt_map(&a.d1, |i, x| i.mean(x)),
            d2: self.opt_map(&a.d2, |i, x| i.mean(x)),
        }
    }

    fn hcat(&mut self, a: &Self::T, b: &Self::T) -> Self::T {
        let v = self.inner.hcat(&a.v, &b.v);
        let lane = |this: &mut Self, x: &Option<B::T>, y: &Option<B::T>| match (x, y) {
            (None, None) => None,
            (Some(x), Some(y)) => Some(this.inner.hcat(x, y)),
            (Some(x), None) => {
                let z = this.zeros_like(&b.v);
                Some(this.inner.hcat(x, &z))
            }
            (None, Some(y)) => {
                let z = this.zeros_like(&a.v);
                Some(this.inner.hcat(&z, y))
            }
        };
        let d1 = lane(self, &a.d1, &b.d1);
        let d2 = lane(self, &a.d2, &b.d2);
        DualVar { v, d1, d2 }
    }

    fn col_block(&mut self, a: &Self::T, start: usize, width: usize) -> Self::T {
        DualVar {
            v: self.inner.col_block(&a.v, start, width),
            d1: self.opt_map(&a.d1, |i, x| i.col_block(x, start, width)),
            d2: self.opt_map(&a.d2, |i, x| i.col_block(x, start, width)),
        }
    }
}

/// Materialises an optional derivative lane as a value (zeros when absent).
pub fn lane_or_zero<B: Backend>(b: &mut B, lane: &Option<B::T>, like: &B::T) -> B::T {
    match lane {
        Some(x) => x.clone(),
        None => {
            let (r, c) = b.value(like).shape();
            b.constant(Mat::zeros(r, c))
        }
    }
}

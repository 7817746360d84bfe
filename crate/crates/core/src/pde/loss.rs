use crate::autodiff::{collect_gradients, lane_or_zero, register_params, Backend, Eager, GradientVector, Tape};
use crate::deeponet::{DeepOnetParams, Rows};
use crate::error::{Error, Result};
use crate::tensor::Mat;

use super::problem::{Constants, PdeProblem, ProblemKind};

/// Guard under the Eikonal square root.
pub const EIKONAL_EPS: f64 = 1e-12;

/// One training step's rows, grouped by role. Pools a problem does not use are empty.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub ic: Rows,
    pub bc: Rows,
    pub physics: Rows,
}

/// Loss components; `ic` already carries the λ weight, so
/// `ic + bc + physics == total`. The Eikonal sign penalty is counted in `physics`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossReport {
    pub ic: f64,
    pub bc: f64,
    pub physics: f64,
    pub total: f64,
}

impl LossReport {
    /// The constraint (data-fit) part, `ic + bc`.
    pub fn operator(&self) -> f64 {
        self.ic + self.bc
    }
}

struct Terms<T> {
    ic: T,
    bc: T,
    physics: T,
}

fn zero<B: Backend>(be: &mut B) -> B::T {
    be.constant(Mat::scalar(0.0))
}

fn minus_target<B: Backend>(be: &mut B, pred: &B::T, target: &[f64]) -> B::T {
    let t = be.constant(Mat::column(target));
    be.sub(pred, &t)
}

fn with_column(y: &Mat, col: usize, value: f64) -> Mat {
    let mut out = y.clone();
    for i in 0..out.rows() {
        out.set(i, col, value);
    }
    out
}

/// Raw physics quantity per row (`rows x 1`), before the target is subtracted:
/// antiderivative `dG/dy`; diffusion–reaction `G_t − D G_xx − k G²`;
/// Burgers `G_t + G G_x − ν G_xx`; Eikonal `sqrt(G_x² + G_y² + ε)`.
pub(crate) fn physics_rows<B: Backend>(
    problem: &PdeProblem,
    params: &DeepOnetParams,
    be: &mut B,
    u: &Mat,
    y: &Mat,
) -> B::T {
    let b = params.branch_features(be, u);
    match (problem.kind, problem.constants) {
        (ProblemKind::Antiderivative, _) => {
            let g = params.forward_along(be, &b, y, 0, false);
            lane_or_zero(be, &g.d1, &g.v)
        }
        (ProblemKind::DiffusionReaction, Constants::DiffusionReaction { d, k }) => {
            let gx = params.forward_along(be, &b, y, 0, true);
            let gt = params.forward_along(be, &b, y, 1, false);
            let g_t = lane_or_zero(be, &gt.d1, &gt.v);
            let g_xx = lane_or_zero(be, &gx.d2, &gx.v);
            let diff = be.scale(&g_xx, d);
            let g2 = be.square(&gx.v);
            let react = be.scale(&g2, k);
            let r = be.sub(&g_t, &diff);
            be.sub(&r, &react)
        }
        (ProblemKind::Burgers, Constants::Burgers { nu }) => {
            let gx = params.forward_along(be, &b, y, 0, true);
            let gt = params.forward_along(be, &b, y, 1, false);
            let g_t = lane_or_zero(be, &gt.d1, &gt.v);
            let g_x = lane_or_zero(be, &gx.d1, &gx.v);
            let g_xx = lane_or_zero(be, &gx.d2, &gx.v);
            let adv = be.mul(&gx.v, &g_x);
            let visc = be.scale(&g_xx, nu);
            let r = be.add(&g_t, &adv);
            be.sub(&r, &visc)
        }
        (ProblemKind::Eikonal, _) => {
            let gx = params.forward_along(be, &b, y, 0, false);
            let gy = params.forward_along(be, &b, y, 1, false);
            let g_x = lane_or_zero(be, &gx.d1, &gx.v);
            let g_y = lane_or_zero(be, &gy.d1, &gy.v);
            let sx = be.square(&g_x);
            let sy = be.square(&g_y);
            let s = be.add(&sx, &sy);
            let s = be.add_scalar(&s, EIKONAL_EPS);
            be.unary(&s, crate::autodiff::Unary::Sqrt)
        }
        (kind, c) => panic!("{kind} problem with constants {c:?}; validate() first"),
    }
}

fn build<B: Backend>(
    problem: &PdeProblem,
    params: &DeepOnetParams,
    be: &mut B,
    batch: &Batch,
) -> Result<Terms<B::T>> {
    let lambda = problem.lambda_ic;
    let (ic, bc) = match problem.kind {
        ProblemKind::Antiderivative | ProblemKind::Eikonal => {
            let ic = if batch.ic.is_empty() {
                zero(be)
            } else {
                let g = params.forward(be, &batch.ic.u, &batch.ic.y);
                let r = minus_target(be, &g, batch.ic.targets()?);
                let l = be.mean_square(&r);
                be.scale(&l, lambda)
            };
            let bc = if batch.bc.is_empty() {
                zero(be)
            } else {
                let g = params.forward(be, &batch.bc.u, &batch.bc.y);
                let r = minus_target(be, &g, batch.bc.targets()?);
                be.mean_square(&r)
            };
            (ic, bc)
        }
        ProblemKind::DiffusionReaction => {
            // One boundary pool; rows with t = 0 are reported as the initial
            // condition, both parts share the pool-size denominator.
            let rows = &batch.bc;
            if rows.is_empty() {
                (zero(be), zero(be))
            } else {
                let n = rows.len() as f64;
                let g = params.forward(be, &rows.u, &rows.y);
                let r = minus_target(be, &g, rows.targets()?);
                let sq = be.square(&r);
                let is_ic: Vec<f64> = (0..rows.len())
                    .map(|i| if rows.y.get(i, 1) == 0.0 { 1.0 } else { 0.0 })
                    .collect();
                let not_ic: Vec<f64> = is_ic.iter().map(|v| 1.0 - v).collect();
                let mi = be.constant(Mat::column(&is_ic));
                let mb = be.constant(Mat::column(&not_ic));
                let a = be.mul(&sq, &mi);
                let a = be.sum(&a);
                let a = be.scale(&a, lambda / n);
                let c = be.mul(&sq, &mb);
                let c = be.sum(&c);
                let c = be.scale(&c, 1.0 / n);
                (a, c)
            }
        }
        ProblemKind::Burgers => {
            let ic = if batch.ic.is_empty() {
                zero(be)
            } else {
                let g = params.forward(be, &batch.ic.u, &batch.ic.y);
                let r = minus_target(be, &g, batch.ic.targets()?);
                let l = be.mean_square(&r);
                be.scale(&l, lambda)
            };
            let bc = if batch.bc.is_empty() {
                zero(be)
            } else {
                // bc rows carry y = (·, t); evaluate at x = 0 and x = 1.
                let rows = &batch.bc;
                let b = params.branch_features(be, &rows.u);
                let y0 = with_column(&rows.y, 0, 0.0);
                let y1 = with_column(&rows.y, 0, 1.0);
                let g0 = params.forward_along(be, &b, &y0, 0, false);
                let g1 = params.forward_along(be, &b, &y1, 0, false);
                let dv = be.sub(&g0.v, &g1.v);
                let lv = be.mean_square(&dv);
                let d0 = lane_or_zero(be, &g0.d1, &g0.v);
                let d1 = lane_or_zero(be, &g1.d1, &g1.v);
                let dd = be.sub(&d0, &d1);
                let ld = be.mean_square(&dd);
                be.add(&lv, &ld)
            };
            (ic, bc)
        }
    };
    let physics = if !problem.physics || batch.physics.is_empty() {
        zero(be)
    } else {
        let rows = &batch.physics;
        let raw = physics_rows(problem, params, be, &rows.u, &rows.y);
        let r = minus_target(be, &raw, rows.targets()?);
        let l = be.mean_square(&r);
        if problem.kind == ProblemKind::Eikonal && problem.sign_weight > 0.0 {
            let s = sign_penalty(params, be, rows);
            let s = be.scale(&s, problem.sign_weight);
            be.add(&l, &s)
        } else {
            l
        }
    };
    Ok(Terms { ic, bc, physics })
}

/// Even-odd test of `(x, y)` against the closed polygon stored interleaved
/// in `curve` (`x0, y0, x1, y1, ...`). Points on an edge count as outside.
pub fn inside_curve(curve: &[f64], x: f64, y: f64) -> bool {
    let n = curve.len() / 2;
    let mut inside = false;
    for i in 0..n {
        let j = (i + n - 1) % n;
        let (xi, yi, xj, yj) = (curve[2 * i], curve[2 * i + 1], curve[2 * j], curve[2 * j + 1]);
        if (yi > y) != (yj > y) && x < xj + (y - yj) * (xi - xj) / (yi - yj) {
            inside = !inside;
        }
    }
    inside
}

/// Mean of `G²` over rows whose sign disagrees with the inside/outside
/// convention (negative inside the curve, positive outside). Zero at the
/// signed distance function; removes the `G -> -G` symmetry of the residual.
fn sign_penalty<B: Backend>(params: &DeepOnetParams, be: &mut B, rows: &Rows) -> B::T {
    let g = params.forward(be, &rows.u, &rows.y);
    let wrong: Vec<f64> = {
        let gv = be.value(&g);
        (0..rows.len())
            .map(|i| {
                let inside = inside_curve(rows.u.row_slice(i), rows.y.get(i, 0), rows.y.get(i, 1));
                let v = gv.get(i, 0);
                if (inside && v > 0.0) || (!inside && v < 0.0) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
    };
    let mask = be.constant(Mat::column(&wrong));
    let sq = be.square(&g);
    let masked = be.mul(&sq, &mask);
    be.mean(&masked)
}

fn check_dims(problem: &PdeProblem, params: &DeepOnetParams, batch: &Batch) -> Result<()> {
    problem.validate()?;
    params.validate()?;
    if params.d() != problem.d() {
        return Err(Error::shape(format!(
            "{} needs a {}-d trunk, model has {}",
            problem.kind,
            problem.d(),
            params.d()
        )));
    }
    for (name, rows) in [("ic", &batch.ic), ("bc", &batch.bc), ("physics", &batch.physics)] {
        if rows.is_empty() {
            continue;
        }
        if rows.u.cols() != params.m() || rows.y.cols() != problem.d() || rows.u.rows() != rows.len() {
            return Err(Error::shape(format!(
                "{name} rows are {}x{} / {}x{}, model wants m = {}, d = {}",
                rows.u.rows(),
                rows.u.cols(),
                rows.y.rows(),
                rows.y.cols(),
                params.m(),
                problem.d()
            )));
        }
    }
    Ok(())
}

impl PdeProblem {
    pub fn loss(&self, params: &DeepOnetParams, batch: &Batch) -> Result<LossReport> {
        check_dims(self, params, batch)?;
        let mut be = Eager;
        let t = build(self, params, &mut be, batch)?;
        report(t.ic.item(), t.bc.item(), t.physics.item())
    }

    /// Loss components and the gradient of the total with respect to every parameter.
    pub fn loss_and_grad(&self, params: &DeepOnetParams, batch: &Batch) -> Result<(LossReport, GradientVector)> {
        check_dims(self, params, batch)?;
        let mut tape = Tape::new();
        register_params(&mut tape, params);
        let t = build(self, params, &mut tape, batch)?;
        let ib = tape.add(t.ic, t.bc);
        let total = tape.add(ib, t.physics);
        let rep = report(
            tape.value(t.ic).item(),
            tape.value(t.bc).item(),
            tape.value(t.physics).item(),
        )?;
        let grads = collect_gradients(&tape, total)?;
        Ok((rep, grads))
    }
}

fn report(ic: f64, bc: f64, physics: f64) -> Result<LossReport> {
    let total = ic + bc + physics;
    if !total.is_finite() {
        return Err(Error::NonFinite(format!("loss (ic {ic}, bc {bc}, physics {physics})")));
    }
    Ok(LossReport { ic, bc, physics, total })
}

pub fn loss_antiderivative(params: &DeepOnetParams, batch: &Batch) -> Result<f64> {
    PdeProblem::antiderivative(params.m()).loss(params, batch).map(|r| r.total)
}

pub fn loss_diffusion_reaction(params: &DeepOnetParams, batch: &Batch) -> Result<f64> {
    PdeProblem::diffusion_reaction(1, 1).loss(params, batch).map(|r| r.total)
}

pub fn loss_burgers(params: &DeepOnetParams, batch: &Batch, lambda_ic: f64) -> Result<LossReport> {
    PdeProblem::burgers(1, 1, lambda_ic).loss(params, batch)
}

pub fn loss_eikonal(params: &DeepOnetParams, batch: &Batch) -> Result<f64> {
    PdeProblem::eikonal(1, 2.0).loss(params, batch).map(|r| r.total)
}

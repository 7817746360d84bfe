mod common;

use common::*;
use pideeponet::autodiff::*;
use pideeponet::deeponet::DeepOnetParams;
use pideeponet::nn::{Activation, BackboneKind};
use pideeponet::pde::{build_pools, Batch, PdeProblem};
use pideeponet::Mat;
use proptest::prelude::*;
use rand::Rng;

fn model(seed: u64, m: usize, d: usize, depth: usize, width: usize, kind: BackboneKind, act: Activation, fourier: bool) -> DeepOnetParams {
    let mut b = spec(m, depth, width, kind);
    let mut t = spec(d, depth, width, kind);
    b.activation = act;
    t.activation = act;
    if fourier {
        t.fourier = Some((width / 2, 1.5));
    }
    DeepOnetParams::init(&b, &t, &mut rng(seed)).unwrap()
}

fn random_points(seed: u64, n: usize, d: usize) -> Mat {
    let mut r = rng(seed);
    Mat::from_fn(n, d, |_, _| r.random_range(-1.0..1.0))
}

/// Batched jet derivatives must agree with the per-point scalar oracle.
fn check_against_oracle(p: &DeepOnetParams, tol: f64) {
    let u: Vec<f64> = (0..p.m()).map(|i| (i as f64 * 0.7).sin()).collect();
    let y = random_points(99, 25, p.d());
    let mut be = Eager;
    let b = p.branch_features(&mut be, &Mat::from_rows(&vec![u.clone(); y.rows()]));
    for axis in 0..p.d() {
        let out = p.forward_along(&mut be, &b, &y, axis, true);
        let zeros = Mat::zeros(y.rows(), 1);
        let d1 = out.d1.clone().unwrap_or_else(|| zeros.clone());
        let d2 = out.d2.clone().unwrap_or(zeros);
        for i in 0..y.rows() {
            let (g, g1, g2) = oracle_derivs(p, &u, y.row_slice(i), axis);
            assert!(rel_err_floor(out.v.get(i, 0), g, 1.0) < tol);
            assert!(rel_err_floor(d1.get(i, 0), g1, 1.0) < tol);
            assert!(rel_err_floor(d2.get(i, 0), g2, 1.0) < tol, "{} vs {g2}", d2.get(i, 0));
        }
    }
}

#[test]
fn jet_matches_scalar_oracle_for_every_architecture() {
    for (i, kind) in [BackboneKind::Mlp, BackboneKind::ModifiedMlp].into_iter().enumerate() {
        for act in [Activation::Tanh, Activation::Elu] {
            for fourier in [false, true] {
                let p = model(i as u64 + 1, 4, 2, 4, 6, kind, act, fourier);
                check_against_oracle(&p, 1e-12);
            }
        }
    }
}

#[test]
fn relu_jet_has_zero_curvature() {
    let p = model(3, 3, 1, 3, 5, BackboneKind::Mlp, Activation::Relu, false);
    check_against_oracle(&p, 1e-12);
    let y = random_points(4, 10, 1);
    let b = p.branch_features(&mut Eager, &Mat::zeros(10, 3));
    let out = p.forward_along(&mut Eager, &b, &y, 0, true);
    if let Some(d2) = out.d2 {
        assert!(d2.as_slice().iter().all(|&v| v == 0.0));
    }
}

fn check_data_gradient(p: &DeepOnetParams) {
    let u = random_points(5, 6, p.m());
    let y = random_points(6, 6, p.d());
    let target = Mat::column(&[0.3, -0.2, 0.5, 0.0, 1.0, -1.0]);
    let loss = |q: &DeepOnetParams| {
        let g = q.forward(&mut Eager, &u, &y);
        let r = g.zip_map(&target, |a, b| a - b);
        r.as_slice().iter().map(|v| v * v).sum::<f64>() / 6.0
    };
    let (value, grads) = reverse_grad(p, |tape| {
        let g = p.forward(tape, &u, &y);
        let t = tape.constant(target.clone());
        let r = tape.sub(g, t);
        tape.mean_square(&r)
    })
    .unwrap();
    assert!(rel_err(value, loss(p)) < 1e-14);
    let fd = fd_gradient(p, &loss, 1e-6);
    let ad = grads.flatten();
    assert_eq!(fd.len(), ad.len());
    let num: f64 = fd.iter().zip(&ad).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let den: f64 = fd.iter().map(|a| a * a).sum::<f64>().sqrt();
    assert!(num / den < 1e-6, "relative gradient error {}", num / den);
}

#[test]
fn mlp_parameter_gradient_matches_finite_differences() {
    check_data_gradient(&model(7, 3, 1, 2, 4, BackboneKind::Mlp, Activation::Tanh, false));
    check_data_gradient(&model(8, 3, 2, 3, 4, BackboneKind::Mlp, Activation::Tanh, true));
}

#[test]
fn modified_mlp_parameter_gradient_matches_finite_differences() {
    check_data_gradient(&model(9, 3, 2, 4, 4, BackboneKind::ModifiedMlp, Activation::Tanh, false));
}

#[test]
fn burgers_residual_loss_gradient_matches_finite_differences() {
    let p = model(10, 4, 2, 2, 2, BackboneKind::Mlp, Activation::Tanh, false);
    let s = pideeponet::deeponet::FieldSample::new(0, &[0.0, 0.25, 0.5, 0.75], vec![0.2, -0.4, 0.1, 0.6]).unwrap();
    let problem = PdeProblem::burgers(4, 8, 3.0);
    let pools = build_pools(&problem, &[s], 11).unwrap();
    let all = |ds: &pideeponet::deeponet::OperatorDataset| ds.gather(&(0..ds.len()).collect::<Vec<_>>());
    let batch = Batch {
        ic: all(pools.ic.as_ref().unwrap()),
        bc: all(pools.bc.as_ref().unwrap()),
        physics: all(pools.physics.as_ref().unwrap()),
    };
    let (rep, grads) = problem.loss_and_grad(&p, &batch).unwrap();
    assert!(rel_err(rep.total, problem.loss(&p, &batch).unwrap().total) < 1e-13);
    let fd = fd_gradient(&p, &|q| problem.loss(q, &batch).unwrap().total, 1e-6);
    for (a, b) in grads.flatten().iter().zip(&fd) {
        assert!(rel_err_floor(*a, *b, 1e-3) < 1e-5, "{a} vs {b}");
    }
}

#[test]
fn every_problem_gradient_matches_finite_differences() {
    let curve = pideeponet::deeponet::FieldSample::curve(
        0,
        &Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]]),
    )
    .unwrap();
    let line = pideeponet::deeponet::FieldSample::new(1, &[0.0, 0.5, 1.0], vec![0.3, 0.1, -0.2]).unwrap();
    let cases = [
        (PdeProblem::antiderivative(3), line.clone(), 1),
        (PdeProblem::diffusion_reaction(3, 4), line, 2),
        (PdeProblem::eikonal(5, 2.0), curve, 2),
    ];
    for (problem, sample, d) in cases {
        let p = model(12, sample.values.len(), d, 3, 3, BackboneKind::ModifiedMlp, Activation::Tanh, false);
        let pools = build_pools(&problem, std::slice::from_ref(&sample), 13).unwrap();
        let take = |ds: &Option<pideeponet::deeponet::OperatorDataset>| match ds {
            Some(ds) => ds.gather(&(0..ds.len()).collect::<Vec<_>>()),
            None => empty_rows(sample.values.len(), d),
        };
        let batch = Batch {
            ic: take(&pools.ic),
            bc: take(&pools.bc),
            physics: take(&pools.physics),
        };
        let (_, grads) = problem.loss_and_grad(&p, &batch).unwrap();
        let fd = fd_gradient(&p, &|q| problem.loss(q, &batch).unwrap().total, 1e-6);
        for (a, b) in grads.flatten().iter().zip(&fd) {
            assert!(rel_err_floor(*a, *b, 1e-3) < 1e-5, "{:?}: {a} vs {b}", problem.kind);
        }
    }
}

#[test]
fn dual_closed_forms_on_a_grid() {
    for i in 0..1000 {
        let x = -3.0 + 6.0 * i as f64 / 999.0;
        let (v, d1, d2) = directional_derivs(|z| z[0].tanh(), &[x], 0).unwrap();
        let t = x.tanh();
        assert!((v - t).abs() < 1e-15);
        assert!((d1 - (1.0 - t * t)).abs() < 1e-14);
        assert!((d2 - (-2.0 * t * (1.0 - t * t))).abs() < 1e-14);

        let (_, d1, d2) = directional_derivs(|z| z[0].sin() * z[0].exp(), &[x], 0).unwrap();
        let e = x.exp();
        assert!(rel_err_floor(d1, e * (x.sin() + x.cos()), 1.0) < 1e-14);
        assert!(rel_err_floor(d2, 2.0 * e * x.cos(), 1.0) < 1e-14);

        let (_, d1, d2) = directional_derivs(|z| z[0].powi(4) - 3.0 * z[0] * z[0], &[x], 0).unwrap();
        assert!(rel_err_floor(d1, 4.0 * x.powi(3) - 6.0 * x, 1.0) < 1e-13);
        assert!(rel_err_floor(d2, 12.0 * x * x - 6.0, 1.0) < 1e-13);
    }
}

#[test]
fn jet_on_tape_matches_jet_on_eager() {
    let p = model(14, 3, 2, 3, 5, BackboneKind::ModifiedMlp, Activation::Tanh, true);
    let u = random_points(15, 7, 3);
    let y = random_points(16, 7, 2);
    let b = p.branch_features(&mut Eager, &u);
    let eager = p.forward_along(&mut Eager, &b, &y, 1, true);
    let mut tape = Tape::new();
    let bt = p.branch_features(&mut tape, &u);
    let taped = p.forward_along(&mut tape, &bt, &y, 1, true);
    assert_eq!(tape.value(taped.v), &eager.v);
    assert_eq!(tape.value(taped.d1.unwrap()), eager.d1.as_ref().unwrap());
    assert_eq!(tape.value(taped.d2.unwrap()), eager.d2.as_ref().unwrap());
}

#[test]
fn gradients_are_deterministic() {
    let p = model(17, 3, 2, 3, 4, BackboneKind::Mlp, Activation::Tanh, false);
    let s = pideeponet::deeponet::FieldSample::new(0, &[0.0, 0.5, 1.0], vec![0.3, 0.1, -0.2]).unwrap();
    let problem = PdeProblem::diffusion_reaction(4, 4);
    let pools = build_pools(&problem, &[s], 1).unwrap();
    let batch = Batch {
        ic: empty_rows(3, 2),
        bc: pools.bc.as_ref().unwrap().gather(&[0, 1, 2, 3]),
        physics: pools.physics.as_ref().unwrap().gather(&[3, 2, 1, 0]),
    };
    let a = problem.loss_and_grad(&p, &batch).unwrap();
    let b = problem.loss_and_grad(&p, &batch).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn directional_derivatives_are_linear(
        x in -2.0f64..2.0, y in -2.0f64..2.0, a in -3.0f64..3.0, b in -3.0f64..3.0, axis in 0usize..2
    ) {
        let f = |z: &[Dual2]| (z[0] * z[1]).sin() + z[1].tanh();
        let g = |z: &[Dual2]| z[0].exp() * z[1] + z[0].powi(3);
        let (fv, f1, f2) = directional_derivs(f, &[x, y], axis).unwrap();
        let (gv, g1, g2) = directional_derivs(g, &[x, y], axis).unwrap();
        let (hv, h1, h2) = directional_derivs(|z| f(z) * a + g(z) * b, &[x, y], axis).unwrap();
        let tol = 1e-12 * (1.0 + fv.abs() + gv.abs() + f1.abs() + g1.abs() + f2.abs() + g2.abs()) * (1.0 + a.abs() + b.abs());
        prop_assert!((hv - (a * fv + b * gv)).abs() < tol);
        prop_assert!((h1 - (a * f1 + b * g1)).abs() < tol);
        prop_assert!((h2 - (a * f2 + b * g2)).abs() < tol);
    }

    #[test]
    fn reverse_gradient_of_a_sum_is_the_sum_of_gradients(w in -2.0f64..2.0, c in -2.0f64..2.0) {
        let p = ParamSet::scalar("w", w);
        let (_, g1) = reverse_grad(&p, |t| { let v = t.param("w", &Mat::scalar(w)); t.unary(v, Unary::Sin) }).unwrap();
        let (_, g2) = reverse_grad(&p, |t| { let v = t.param("w", &Mat::scalar(w)); t.scale(v, c) }).unwrap();
        let (_, g3) = reverse_grad(&p, |t| {
            let v = t.param("w", &Mat::scalar(w));
            let s = t.unary(v, Unary::Sin);
            let l = t.scale(v, c);
            t.add(s, l)
        }).unwrap();
        let want = g1.scalar("w").unwrap() + g2.scalar("w").unwrap();
        prop_assert!((g3.scalar("w").unwrap() - want).abs() < 1e-14);
    }
}

mod common;

use common::*;
use pideeponet::autodiff::{directional_derivs, Dual2};
use pideeponet::deeponet::{deeponet_eval, FieldSample};
use pideeponet::nn::BackboneKind;
use pideeponet::pde::*;
use pideeponet::Error;
use rand::Rng;

fn grid(m: usize) -> Vec<f64> {
    (0..m).map(|j| j as f64 / (m - 1) as f64).collect()
}

fn field(id: u64, m: usize, f: impl Fn(f64) -> f64) -> FieldSample {
    let g = grid(m);
    let v = g.iter().map(|&x| f(x)).collect();
    FieldSample::new(id, &g, v).unwrap()
}

fn fd1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn fd2_5pt(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h)
}

// ---------- antiderivative ----------

#[test]
fn antiderivative_trivial_residuals() {
    let zero = affine_model(5, &[0.0], 0.0);
    let u0 = field(0, 5, |_| 0.0);
    assert_eq!(residual_antiderivative(&zero, &u0, 0.25).unwrap(), 0.0);
    let ident = affine_model(5, &[1.0], 0.0);
    let u1 = field(1, 5, |_| 1.0);
    for x in grid(5) {
        assert_eq!(residual_antiderivative(&ident, &u1, x).unwrap(), 0.0);
    }
    assert!(matches!(residual_antiderivative(&ident, &u1, 0.3), Err(Error::Invalid(_))));
}

#[test]
fn antiderivative_residual_matches_fd_slope() {
    let m = 11;
    let p = random_model(3, m, 1, 3, 8, BackboneKind::Mlp);
    let mut r = rng(4);
    let u = field(0, m, |x| (3.0 * x).sin());
    let g = grid(m);
    for _ in 0..50 {
        let k = r.random_range(0..m);
        let x = g[k];
        let slope = fd1(|y| deeponet_eval(&p, &u.values, &[y]).unwrap(), x, 1e-5);
        let res = residual_antiderivative(&p, &u, x).unwrap();
        assert!((res - (slope - u.values[k])).abs() < 1e-5);
    }
}

#[test]
fn antiderivative_losses() {
    let m = 4;
    let ident = affine_model(m, &[1.0], 0.0);
    let u1: Vec<f64> = vec![1.0; m];
    let g = grid(m);
    let ic = rows(&[&u1], &[&[0.0]], Some(vec![0.0]));
    let phys_y: Vec<[f64; 1]> = g.iter().map(|&x| [x]).collect();
    let phys = rows(
        &vec![&u1[..]; m],
        &phys_y.iter().map(|y| &y[..]).collect::<Vec<_>>(),
        Some(vec![1.0; m]),
    );
    let batch = Batch {
        ic,
        bc: empty_rows(m, 1),
        physics: phys,
    };
    assert!(loss_antiderivative(&ident, &batch).unwrap().abs() < 1e-15);
    let zero = affine_model(m, &[0.0], 0.0);
    assert_eq!(loss_antiderivative(&zero, &batch).unwrap(), 1.0);
}

#[test]
fn antiderivative_loss_matches_loop_oracle() {
    let m = 6;
    let p = random_model(5, m, 1, 3, 5, BackboneKind::Mlp);
    let samples = [field(0, m, |x| x * x - 0.3), field(1, m, |x| (4.0 * x).cos())];
    let problem = PdeProblem::antiderivative(m);
    let pools = build_pools(&problem, &samples, 7).unwrap();
    let ic = pools.ic.as_ref().unwrap();
    let ph = pools.physics.as_ref().unwrap();
    let all = |n: usize| (0..n).collect::<Vec<_>>();
    let batch = Batch {
        ic: ic.gather(&all(ic.len())),
        bc: empty_rows(m, 1),
        physics: ph.gather(&all(ph.len())),
    };
    let got = problem.loss(&p, &batch).unwrap();

    let mut ic_sum = 0.0;
    for s in &samples {
        ic_sum += deeponet_eval(&p, &s.values, &[0.0]).unwrap().powi(2);
    }
    let mut ph_sum = 0.0;
    for s in &samples {
        for (j, &x) in s.grid().iter().enumerate() {
            let (_, d1, _) = oracle_derivs(&p, &s.values, &[x], 0);
            ph_sum += (d1 - s.values[j]).powi(2);
        }
    }
    let want_ic = ic_sum / 2.0;
    let want_ph = ph_sum / (2.0 * m as f64);
    assert!(rel_err(got.ic, want_ic) < 1e-12, "{} vs {}", got.ic, want_ic);
    assert!(rel_err(got.physics, want_ph) < 1e-12);
    assert_eq!(got.total, got.ic + got.bc + got.physics);
}

// ---------- diffusion-reaction ----------

#[test]
fn diffusion_reaction_trivial_residuals() {
    let u = field(0, 5, |x| x);
    let zero = affine_model(5, &[0.0, 0.0], 0.0);
    assert_eq!(residual_diffusion_reaction(&zero, &u, 0.3, 0.7).unwrap(), 0.0);
    let g_t = affine_model(5, &[0.0, 1.0], 0.0);
    assert_eq!(residual_diffusion_reaction(&g_t, &u, 0.4, 0.0).unwrap(), 1.0);
    for t in [0.2, 0.5, 1.0] {
        let r = residual_diffusion_reaction(&g_t, &u, 0.4, t).unwrap();
        assert!((r - (1.0 - 0.01 * t * t)).abs() < 1e-15);
    }
}

#[test]
fn diffusion_reaction_residual_matches_fd_terms() {
    let m = 7;
    let p = random_model(8, m, 2, 3, 8, BackboneKind::Mlp);
    let u = field(0, m, |x| (2.0 * x).sin());
    let mut r = rng(9);
    for _ in 0..20 {
        let (x, t) = (r.random_range(0.05..0.95), r.random_range(0.05..0.95));
        let g = |x: f64, t: f64| deeponet_eval(&p, &u.values, &[x, t]).unwrap();
        let gt = fd1(|s| g(x, s), t, 1e-5);
        let gxx = fd2_5pt(|s| g(s, t), x, 1e-3);
        let want = gt - 0.01 * gxx - 0.01 * g(x, t).powi(2);
        let got = residual_diffusion_reaction(&p, &u, x, t).unwrap();
        assert!((got - want).abs() < 1e-4 * want.abs().max(1.0), "{got} vs {want}");
    }
}

#[test]
fn diffusion_reaction_losses() {
    let m = 3;
    let zero = affine_model(m, &[0.0, 0.0], 0.0);
    let mk = |c: f64| {
        let u = vec![c; m];
        Batch {
            ic: empty_rows(m, 2),
            bc: rows(&[&u, &u], &[&[0.3, 0.0], &[1.0, 0.5]], Some(vec![0.0, 0.0])),
            physics: rows(&[&u, &u], &[&[0.0, 0.2], &[0.5, 0.9]], Some(vec![c, c])),
        }
    };
    assert_eq!(loss_diffusion_reaction(&zero, &mk(0.0)).unwrap(), 0.0);
    assert!((loss_diffusion_reaction(&zero, &mk(1.7)).unwrap() - 1.7 * 1.7).abs() < 1e-15);
}

#[test]
fn diffusion_reaction_loss_matches_loop_oracle() {
    let m = 5;
    let p = random_model(10, m, 2, 3, 6, BackboneKind::Mlp);
    let samples = [field(0, m, |x| x - 0.5), field(1, m, |x| (5.0 * x).sin())];
    let problem = PdeProblem::diffusion_reaction(3, 3);
    let pools = build_pools(&problem, &samples, 11).unwrap();
    let bc = pools.bc.as_ref().unwrap();
    let ph = pools.physics.as_ref().unwrap();
    let batch = Batch {
        ic: empty_rows(m, 2),
        bc: bc.gather(&(0..bc.len()).collect::<Vec<_>>()),
        physics: ph.gather(&(0..ph.len()).collect::<Vec<_>>()),
    };
    let got = problem.loss(&p, &batch).unwrap();
    let mut b_ic = 0.0;
    let mut b_bc = 0.0;
    for i in 0..bc.len() {
        let row = bc.row(i);
        let g2 = deeponet_eval(&p, row.u, row.y).unwrap().powi(2);
        if row.y[1] == 0.0 {
            b_ic += g2;
        } else {
            b_bc += g2;
        }
    }
    let mut phys = 0.0;
    for i in 0..ph.len() {
        let row = ph.row(i);
        let (g, _, gxx) = oracle_derivs(&p, row.u, row.y, 0);
        let (_, gt, _) = oracle_derivs(&p, row.u, row.y, 1);
        let res = gt - 0.01 * gxx - 0.01 * g * g;
        phys += (res - row.target.unwrap()).powi(2);
    }
    assert!(rel_err(got.ic + got.bc, (b_ic + b_bc) / 6.0) < 1e-12);
    assert!(rel_err_floor(got.ic, b_ic / 6.0, 1e-300) < 1e-12 || b_ic == 0.0);
    assert!(rel_err(got.physics, phys / 6.0) < 1e-12);
    assert!((got.total - (got.ic + got.bc + got.physics)).abs() <= 1e-15 * got.total);
}

// ---------- Burgers ----------

#[test]
fn burgers_trivial_residuals() {
    let u = field(0, 4, |x| x);
    let zero = affine_model(4, &[0.0, 0.0], 0.0);
    assert_eq!(residual_burgers(&zero, &u, 0.2, 0.3).unwrap(), 0.0);
    let c = affine_model(4, &[0.0, 0.0], 0.8);
    assert_eq!(residual_burgers(&c, &u, 0.2, 0.3).unwrap(), 0.0);
}

#[test]
fn burgers_residual_matches_fd() {
    let m = 6;
    let p = random_model(12, m, 2, 3, 8, BackboneKind::ModifiedMlp);
    let u = field(0, m, |x| (6.0 * x).cos());
    let mut r = rng(13);
    for _ in 0..20 {
        let (x, t) = (r.random_range(0.05..0.95), r.random_range(0.05..0.95));
        let g = |x: f64, t: f64| deeponet_eval(&p, &u.values, &[x, t]).unwrap();
        let want = fd1(|s| g(x, s), t, 1e-5) + g(x, t) * fd1(|s| g(s, t), x, 1e-5)
            - 0.01 * fd2_5pt(|s| g(s, t), x, 1e-3);
        let got = residual_burgers(&p, &u, x, t).unwrap();
        assert!((got - want).abs() < 1e-4 * want.abs().max(1.0), "{got} vs {want}");
    }
}

fn burgers_batch(m: usize, c: f64) -> Batch {
    let u = vec![c; m];
    Batch {
        ic: rows(&[&u, &u], &[&[0.0, 0.0], &[0.5, 0.0]], Some(vec![c, c])),
        bc: rows(&[&u, &u], &[&[0.0, 0.3], &[0.0, 0.8]], None),
        physics: rows(&[&u, &u], &[&[0.1, 0.1], &[0.7, 0.4]], Some(vec![0.0, 0.0])),
    }
}

#[test]
fn burgers_constant_solution_has_zero_loss() {
    let c = affine_model(3, &[0.0, 0.0], 0.6);
    let rep = loss_burgers(&c, &burgers_batch(3, 0.6), 20.0).unwrap();
    assert_eq!(rep, LossReport::default());
}

#[test]
fn burgers_lambda_scales_only_the_ic_term() {
    let p = random_model(14, 3, 2, 3, 5, BackboneKind::Mlp);
    let b = burgers_batch(3, 0.4);
    let one = loss_burgers(&p, &b, 1.0).unwrap();
    let two = loss_burgers(&p, &b, 2.0).unwrap();
    assert_eq!(two.ic, 2.0 * one.ic);
    assert_eq!(two.bc, one.bc);
    assert_eq!(two.physics, one.physics);
    assert!(one.ic >= 0.0 && one.bc >= 0.0 && one.physics >= 0.0);
}

#[test]
fn burgers_loss_matches_loop_oracle() {
    let m = 4;
    let p = random_model(15, m, 2, 4, 5, BackboneKind::ModifiedMlp);
    let s = FieldSample::new(0, &[0.0, 0.25, 0.5, 0.75], vec![0.1, -0.2, 0.05, 0.3]).unwrap();
    let problem = PdeProblem::burgers(4, 4, 1.0);
    let pools = build_pools(&problem, std::slice::from_ref(&s), 16).unwrap();
    let take = |ds: &pideeponet::deeponet::OperatorDataset| ds.gather(&(0..ds.len()).collect::<Vec<_>>());
    let batch = Batch {
        ic: take(pools.ic.as_ref().unwrap()),
        bc: take(pools.bc.as_ref().unwrap()),
        physics: take(pools.physics.as_ref().unwrap()),
    };
    let got = problem.loss(&p, &batch).unwrap();

    let mut ic = 0.0;
    for (j, &x) in s.grid().iter().enumerate() {
        ic += (deeponet_eval(&p, &s.values, &[x, 0.0]).unwrap() - s.values[j]).powi(2);
    }
    let mut bc = 0.0;
    for i in 0..4 {
        let t = batch.bc.y.get(i, 1);
        let (g0, d0, _) = oracle_derivs(&p, &s.values, &[0.0, t], 0);
        let (g1, d1, _) = oracle_derivs(&p, &s.values, &[1.0, t], 0);
        bc += (g0 - g1).powi(2) + (d0 - d1).powi(2);
    }
    let mut ph = 0.0;
    for i in 0..4 {
        let y = batch.physics.y.row_slice(i);
        let (g, gx, gxx) = oracle_derivs(&p, &s.values, y, 0);
        let (_, gt, _) = oracle_derivs(&p, &s.values, y, 1);
        ph += (gt + g * gx - 0.01 * gxx).powi(2);
    }
    assert!(rel_err(got.ic, ic / 4.0) < 1e-12);
    assert!(rel_err(got.bc, bc / 4.0) < 1e-12);
    assert!(rel_err(got.physics, ph / 4.0) < 1e-12);
}

// ---------- Eikonal ----------

#[test]
fn eikonal_trivial_residuals() {
    let curve = FieldSample::curve(0, &pideeponet::Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]])).unwrap();
    let gx = affine_model(6, &[1.0, 0.0], 0.0);
    let r = residual_eikonal(&gx, &curve, 0.3, -1.2).unwrap();
    assert!((r - 1.0).abs() < 1e-12);
    let zero = affine_model(6, &[0.0, 0.0], 0.0);
    let r0 = residual_eikonal(&zero, &curve, 0.3, -1.2).unwrap();
    assert!(r0 < 1e-5);
    let u = curve.values.clone();
    let batch = Batch {
        ic: empty_rows(6, 2),
        bc: rows(&[&u, &u], &[&[1.0, 0.0], &[0.0, 1.0]], Some(vec![0.0, 0.0])),
        physics: rows(&[&u], &[&[0.5, 0.5]], Some(vec![1.0])),
    };
    let rep = PdeProblem::eikonal(1, 2.0).loss(&zero, &batch).unwrap();
    assert_eq!(rep.bc, 0.0);
    assert!((rep.physics - 1.0).abs() < 1e-5);
}

#[test]
fn eikonal_exact_sdf_has_unit_gradient() {
    // Same residual formula applied to the analytic circle SDF.
    let r0 = 1.3;
    let mut r = rng(17);
    for _ in 0..100 {
        let p: [f64; 2] = [r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)];
        if (p[0] * p[0] + p[1] * p[1]).sqrt() < 0.1 {
            continue;
        }
        let sdf = |v: &[Dual2]| (v[0] * v[0] + v[1] * v[1]).sqrt() - r0;
        let (_, gx, _) = directional_derivs(sdf, &p, 0).unwrap();
        let (_, gy, _) = directional_derivs(sdf, &p, 1).unwrap();
        let res = (gx * gx + gy * gy + EIKONAL_EPS).sqrt();
        assert!((res - 1.0).powi(2) < 1e-20);
    }
}

#[test]
fn eikonal_residual_matches_fd_and_loop_oracle() {
    let m = 5;
    let pts = pideeponet::Mat::from_fn(m, 2, |j, c| {
        let a = std::f64::consts::TAU * j as f64 / m as f64;
        0.8 * if c == 0 { a.cos() } else { a.sin() }
    });
    let curve = FieldSample::curve(0, &pts).unwrap();
    let p = random_model(18, 2 * m, 2, 3, 6, BackboneKind::Mlp);
    let g = |x: f64, y: f64| deeponet_eval(&p, &curve.values, &[x, y]).unwrap();
    let mut r = rng(19);
    for _ in 0..20 {
        let (x, y) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
        let want = (fd1(|s| g(s, y), x, 1e-5).powi(2) + fd1(|s| g(x, s), y, 1e-5).powi(2) + 1e-12).sqrt();
        let got = residual_eikonal(&p, &curve, x, y).unwrap();
        assert!((got - want).abs() < 1e-4 * want.max(1.0));
    }

    let problem = PdeProblem::eikonal(5, 2.0);
    let pools = build_pools(&problem, std::slice::from_ref(&curve), 20).unwrap();
    let bc = pools.bc.unwrap();
    let ph = pools.physics.unwrap();
    assert_eq!(bc.len(), m);
    let batch = Batch {
        ic: empty_rows(2 * m, 2),
        bc: bc.gather(&(0..m).collect::<Vec<_>>()),
        physics: ph.gather(&(0..5).collect::<Vec<_>>()),
    };
    let got = problem.loss(&p, &batch).unwrap();
    let mut want_bc = 0.0;
    for j in 0..m {
        want_bc += g(pts.get(j, 0), pts.get(j, 1)).powi(2);
    }
    let mut want_ph = 0.0;
    for i in 0..5 {
        let y = ph.row(i).y;
        assert!(y.iter().all(|c| (-2.0..2.0).contains(c)));
        let (_, gx, _) = oracle_derivs(&p, &curve.values, y, 0);
        let (_, gy, _) = oracle_derivs(&p, &curve.values, y, 1);
        want_ph += ((gx * gx + gy * gy + 1e-12).sqrt() - 1.0).powi(2);
    }
    assert!(rel_err(got.bc, want_bc / m as f64) < 1e-12);
    assert!(rel_err(got.physics, want_ph / 5.0) < 1e-12);
}

#[test]
fn inside_curve_on_a_polygonal_circle() {
    let m = 32;
    let pts = pideeponet::Mat::from_fn(m, 2, |j, c| {
        let a = std::f64::consts::TAU * j as f64 / m as f64;
        if c == 0 { a.cos() } else { a.sin() }
    });
    let curve = FieldSample::curve(0, &pts).unwrap();
    let mut r = rng(24);
    for _ in 0..2000 {
        let (x, y) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
        let rho = f64::hypot(x, y);
        if (0.98..1.0).contains(&rho) {
            continue;
        }
        assert_eq!(inside_curve(&curve.values, x, y), rho < 1.0, "({x}, {y})");
    }
}

#[test]
fn eikonal_sign_penalty_matches_loop_oracle() {
    let m = 6;
    let pts = pideeponet::Mat::from_fn(m, 2, |j, c| {
        let a = std::f64::consts::TAU * j as f64 / m as f64;
        if c == 0 { a.cos() } else { a.sin() }
    });
    let curve = FieldSample::curve(0, &pts).unwrap();
    let p = random_model(25, 2 * m, 2, 3, 6, BackboneKind::Mlp);
    let mut plain = PdeProblem::eikonal(40, 2.0);
    let pools = build_pools(&plain, std::slice::from_ref(&curve), 26).unwrap();
    let ph = pools.physics.unwrap();
    let batch = Batch {
        ic: empty_rows(2 * m, 2),
        bc: empty_rows(2 * m, 2),
        physics: ph.gather(&(0..ph.len()).collect::<Vec<_>>()),
    };
    let base = plain.loss(&p, &batch).unwrap().physics;
    plain.sign_weight = 2.5;
    let weighted = plain.loss(&p, &batch).unwrap().physics;
    let mut want = 0.0;
    let mut wrong = 0;
    for i in 0..ph.len() {
        let y = ph.row(i).y;
        let inside = f64::hypot(y[0], y[1]) < 0.5;
        let g = deeponet_eval(&p, &curve.values, y).unwrap();
        if inside_curve(&curve.values, y[0], y[1]) != (g <= 0.0) {
            want += g * g;
            wrong += 1;
        }
        if inside {
            assert!(inside_curve(&curve.values, y[0], y[1]));
        }
    }
    assert!(wrong > 0);
    assert!(rel_err(weighted - base, 2.5 * want / ph.len() as f64) < 1e-10);

    let (_, grads) = plain.loss_and_grad(&p, &batch).unwrap();
    let fd = fd_gradient(&p, &|q| plain.loss(q, &batch).unwrap().total, 1e-6);
    for (a, b) in grads.flatten().iter().zip(&fd) {
        assert!(rel_err_floor(*a, *b, 1e-3) < 1e-5);
    }
}

#[test]
fn negative_sign_weight_is_rejected() {
    let mut p = PdeProblem::eikonal(4, 2.0);
    p.sign_weight = -1.0;
    assert!(matches!(p.validate(), Err(Error::Config(_))));
}

// ---------- shared properties ----------

#[test]
fn losses_are_pure_and_decompose() {
    let m = 5;
    let p = random_model(21, m, 2, 3, 6, BackboneKind::Mlp);
    let samples = [field(0, m, |x| x), field(1, m, |x| 1.0 - x)];
    for problem in [PdeProblem::diffusion_reaction(4, 4), PdeProblem::burgers(5, 4, 7.0)] {
        let pools = build_pools(&problem, &samples, 22).unwrap();
        let take = |ds: &Option<pideeponet::deeponet::OperatorDataset>| match ds {
            Some(ds) => ds.gather(&(0..ds.len()).collect::<Vec<_>>()),
            None => empty_rows(m, 2),
        };
        let batch = Batch {
            ic: take(&pools.ic),
            bc: take(&pools.bc),
            physics: take(&pools.physics),
        };
        let a = problem.loss(&p, &batch).unwrap();
        let b = problem.loss(&p, &batch).unwrap();
        assert_eq!(a, b);
        assert!(a.ic >= 0.0 && a.bc >= 0.0 && a.physics >= 0.0);
        assert_eq!(a.total, a.ic + a.bc + a.physics);
        let (g, _) = problem.loss_and_grad(&p, &batch).unwrap();
        assert!((g.total - a.total).abs() <= 1e-14 * a.total);
    }
}

#[test]
fn burgers_lambda_one_is_the_unweighted_loss() {
    let p = random_model(23, 3, 2, 3, 5, BackboneKind::Mlp);
    let b = burgers_batch(3, 0.2);
    let w = loss_burgers(&p, &b, 1.0).unwrap();
    let mut parts = w;
    parts.total = 0.0;
    assert_eq!(w.total, parts.ic + parts.bc + parts.physics);
}

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::Parameterized;
use crate::datagen::{burgers_etdrk4, circle_sensors, linspace, rk45, sdf_circle, solve_diffusion_reaction_with, Rk45Options};
use crate::deeponet::{DeepOnetParams, FieldSample};
use crate::error::Result;
use crate::nn::{Activation, BackboneKind, NetSpec};
use crate::pde::{build_pools, Batch, PdeProblem, Pools};

/// Outcome of one built-in check.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn tiny_model(m: usize, d: usize, seed: u64) -> Result<DeepOnetParams> {
    let spec = |in_dim| NetSpec {
        in_dim,
        depth: 2,
        width: 4,
        backbone: BackboneKind::Mlp,
        activation: Activation::Tanh,
        fourier: None,
    };
    DeepOnetParams::init(&spec(m), &spec(d), &mut ChaCha8Rng::seed_from_u64(seed))
}

fn whole(pools: &Pools, m: usize, d: usize) -> Batch {
    let all = |p: &Option<crate::deeponet::OperatorDataset>| match p {
        Some(ds) => ds.gather(&(0..ds.len()).collect::<Vec<_>>()),
        None => crate::deeponet::Rows {
            u: crate::tensor::Mat::zeros(0, m),
            y: crate::tensor::Mat::zeros(0, d),
            target: Some(vec![]),
        },
    };
    Batch {
        ic: all(&pools.ic),
        bc: all(&pools.bc),
        physics: all(&pools.physics),
    }
}

/// Largest relative error between reverse-mode and central-difference gradients.
fn gradient_error(problem: &PdeProblem, sample: &FieldSample, seed: u64) -> Result<f64> {
    let d = problem.d();
    let params = tiny_model(sample.values.len(), d, seed)?;
    let pools = build_pools(problem, std::slice::from_ref(sample), seed)?;
    let batch = whole(&pools, sample.values.len(), d);
    let (_, grads) = problem.loss_and_grad(&params, &batch)?;
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for (name, g) in grads.iter() {
        for k in 0..g.len() {
            let shifted = |delta: f64| -> Result<f64> {
                let mut p = params.clone();
                p.visit_params_mut(&mut |n, v| {
                    if n == name {
                        v.as_mut_slice()[k] += delta;
                    }
                });
                Ok(problem.loss(&p, &batch)?.total)
            };
            let fd = (shifted(h)? - shifted(-h)?) / (2.0 * h);
            let ad = g.as_slice()[k];
            worst = worst.max((fd - ad).abs() / fd.abs().max(1e-3));
        }
    }
    Ok(worst)
}

fn check(name: &'static str, result: Result<(bool, String)>) -> Check {
    match result {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

/// Quick gradient and solver oracles.
pub fn run_selftest() -> Vec<Check> {
    let mut out = Vec::new();
    let grid = linspace(0.0, 1.0, 5);
    let line = FieldSample::new(0, &grid, grid.iter().map(|x| (3.0 * x).sin()).collect()).expect("equal lengths");
    let circle = circle_sensors(0.9, 4).expect("valid circle").to_sample(0);
    let periodic = FieldSample::new(0, &[0.0, 0.25, 0.5, 0.75], vec![0.1, 0.3, -0.1, -0.3]).expect("equal lengths");
    let cases = [
        ("gradient: antiderivative", PdeProblem::antiderivative(5), &line),
        ("gradient: diffusion-reaction", PdeProblem::diffusion_reaction(4, 4), &line),
        ("gradient: burgers", PdeProblem::burgers(4, 4, 5.0), &periodic),
        ("gradient: eikonal", PdeProblem::eikonal(4, 2.0), &circle),
    ];
    for (name, problem, sample) in cases {
        out.push(check(
            name,
            gradient_error(&problem, sample, 7).map(|e| (e < 1e-5, format!("max relative error {e:.2e}"))),
        ));
    }

    out.push(check(
        "rk45: cosine antiderivative",
        (|| {
            let xs = linspace(0.0, 1.0, 51);
            let s = rk45(|x, _| (TAU * x).cos(), &xs, 0.0, Rk45Options::default())?;
            let err = xs.iter().zip(&s).map(|(x, v)| (v - (TAU * x).sin() / TAU).abs()).fold(0.0, f64::max);
            Ok((err < 1e-6, format!("max error {err:.2e}")))
        })(),
    ));

    out.push(check(
        "diffusion-reaction: manufactured solution order",
        (|| {
            let err = |n: usize| -> Result<f64> {
                let src = |x: f64, t: f64| {
                    let s = (PI * x).sin();
                    s + 0.01 * PI * PI * t * s - 0.01 * t * t * s * s
                };
                let sol = solve_diffusion_reaction_with(src, 0.01, 0.01, n, n)?;
                let xs = linspace(0.0, 1.0, n);
                let mut e: f64 = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        e = e.max((sol.get(i, j) - xs[j] * (PI * xs[i]).sin()).abs());
                    }
                }
                Ok(e)
            };
            let (a, b) = (err(50)?, err(100)?);
            let order = (a / b).ln() / (99.0f64 / 49.0).ln();
            Ok((order >= 1.9, format!("observed order {order:.3}")))
        })(),
    ));

    out.push(check(
        "burgers: mean conservation",
        (|| {
            let u0: Vec<f64> = (0..64).map(|j| 0.1 + 0.2 * (TAU * j as f64 / 64.0).sin()).collect();
            let s = burgers_etdrk4(&u0, 0.01, 1e-3, 0.1)?;
            let mean = |c: usize| (0..64).map(|i| s.get(i, c)).sum::<f64>() / 64.0;
            let drift = (0..s.cols()).map(|c| (mean(c) - mean(0)).abs()).fold(0.0, f64::max);
            Ok((drift < 1e-10, format!("mean drift {drift:.2e}")))
        })(),
    ));

    out.push(check(
        "circle sdf",
        (|| {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let mut worst: f64 = 0.0;
            for _ in 0..100 {
                let r = rng.random_range(0.5..1.5);
                let th = rng.random_range(0.0..TAU);
                worst = worst.max(sdf_circle(r, r * th.cos(), r * th.sin()).abs());
            }
            let ok = worst < 1e-12 && sdf_circle(1.0, 0.0, 0.0) == -1.0 && sdf_circle(1.0, 2.0, 0.0) == 1.0;
            Ok((ok, format!("max on-circle value {worst:.2e}")))
        })(),
    ));
    out
}

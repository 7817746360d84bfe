#![allow(dead_code)]

use pideeponet::autodiff::{Dual2, Parameterized};
use pideeponet::deeponet::{DeepOnetParams, Rows};
use pideeponet::nn::{Activation, Backbone, BackboneKind, Dense, MlpParams, NetSpec, Network};
use pideeponet::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn spec(in_dim: usize, depth: usize, width: usize, backbone: BackboneKind) -> NetSpec {
    NetSpec {
        in_dim,
        depth,
        width,
        backbone,
        activation: Activation::Tanh,
        fourier: None,
    }
}

pub fn random_model(seed: u64, m: usize, d: usize, depth: usize, width: usize, backbone: BackboneKind) -> DeepOnetParams {
    let mut r = rng(seed);
    DeepOnetParams::init(&spec(m, depth, width, backbone), &spec(d, depth, width, backbone), &mut r).unwrap()
}

pub fn affine_net(w: Mat, b: Mat) -> Network {
    Network {
        fourier: None,
        body: Backbone::Mlp(MlpParams::from_layers(vec![Dense { w, b }], Activation::Tanh).unwrap()),
    }
}

/// `G(u)(y) = c0 + Σ_j w_j y_j`: branch ≡ 1 (q = 1), affine trunk.
pub fn affine_model(m: usize, w: &[f64], c0: f64) -> DeepOnetParams {
    DeepOnetParams {
        branch: affine_net(Mat::zeros(m, 1), Mat::scalar(1.0)),
        trunk: affine_net(Mat::column(w), Mat::scalar(c0)),
    }
}

pub fn rows(us: &[&[f64]], ys: &[&[f64]], target: Option<Vec<f64>>) -> Rows {
    assert_eq!(us.len(), ys.len());
    Rows {
        u: Mat::from_rows(&us.iter().map(|u| u.to_vec()).collect::<Vec<_>>()),
        y: Mat::from_rows(&ys.iter().map(|y| y.to_vec()).collect::<Vec<_>>()),
        target,
    }
}

pub fn empty_rows(m: usize, d: usize) -> Rows {
    Rows {
        u: Mat::zeros(0, m),
        y: Mat::zeros(0, d),
        target: Some(vec![]),
    }
}

fn act(a: Activation, x: Dual2) -> Dual2 {
    match a {
        Activation::Tanh => x.tanh(),
        Activation::Elu => x.elu(),
        Activation::Relu => x.relu(),
    }
}

/// Scalar re-implementation of a network, one weight at a time.
pub fn scalar_net(net: &Network, x: &[Dual2]) -> Vec<Dual2> {
    let x: Vec<Dual2> = match &net.fourier {
        None => x.to_vec(),
        Some(f) => {
            let proj: Vec<Dual2> = (0..f.features())
                .map(|i| {
                    let mut s = Dual2::constant(0.0);
                    for (j, xj) in x.iter().enumerate() {
                        s = s + *xj * f.b.get(i, j);
                    }
                    s
                })
                .collect();
            proj.iter().map(|p| p.cos()).chain(proj.iter().map(|p| p.sin())).collect()
        }
    };
    let dense = |l: &Dense, h: &[Dual2]| -> Vec<Dual2> {
        (0..l.out_dim())
            .map(|k| {
                let mut s = Dual2::constant(l.b.get(0, k));
                for (i, hi) in h.iter().enumerate() {
                    s = s + *hi * l.w.get(i, k);
                }
                s
            })
            .collect()
    };
    match &net.body {
        Backbone::Mlp(p) => {
            let mut h = x;
            let last = p.layers.len() - 1;
            for (i, l) in p.layers.iter().enumerate() {
                h = dense(l, &h);
                if i < last {
                    h = h.into_iter().map(|v| act(p.activation, v)).collect();
                }
            }
            h
        }
        Backbone::Modified(p) => {
            let a = p.activation;
            let u: Vec<Dual2> = dense(&p.u_gate, &x).into_iter().map(|v| act(a, v)).collect();
            let v: Vec<Dual2> = dense(&p.v_gate, &x).into_iter().map(|v| act(a, v)).collect();
            let mut h: Vec<Dual2> = dense(&p.hidden[0], &x).into_iter().map(|v| act(a, v)).collect();
            for g in &p.hidden[1..] {
                let z: Vec<Dual2> = dense(g, &h).into_iter().map(|v| act(a, v)).collect();
                h = (0..z.len())
                    .map(|k| (Dual2::constant(1.0) - z[k]) * u[k] + z[k] * v[k])
                    .collect();
            }
            dense(&p.head, &h)
        }
    }
}

/// `G(u)(y)` with Dual2 coordinates; the branch sees plain values.
pub fn scalar_deeponet(p: &DeepOnetParams, u: &[f64], y: &[Dual2]) -> Dual2 {
    let uc: Vec<Dual2> = u.iter().map(|&v| Dual2::constant(v)).collect();
    let b = scalar_net(&p.branch, &uc);
    let t = scalar_net(&p.trunk, y);
    let mut s = Dual2::constant(0.0);
    for k in 0..b.len() {
        s = s + b[k] * t[k];
    }
    s
}

/// `(G, ∂G/∂y_axis, ∂²G/∂y_axis²)` from the scalar oracle.
pub fn oracle_derivs(p: &DeepOnetParams, u: &[f64], y: &[f64], axis: usize) -> (f64, f64, f64) {
    pideeponet::autodiff::directional_derivs(|yy| scalar_deeponet(p, u, yy), y, axis).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(a.abs()).max(1e-300)
}

/// Relative error with an absolute floor for values near zero.
pub fn rel_err_floor(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

/// Central differences, in the same (sorted by name) order as `GradientVector::flatten`.
pub fn fd_gradient(p: &DeepOnetParams, f: &dyn Fn(&DeepOnetParams) -> f64, h: f64) -> Vec<f64> {
    let mut names = p.param_names();
    names.sort();
    let mut out = Vec::new();
    for name in names {
        let mut len = 0;
        p.visit_params(&mut |n, m| {
            if n == name {
                len = m.len();
            }
        });
        for k in 0..len {
            let shifted = |delta: f64| {
                let mut q = p.clone();
                q.visit_params_mut(&mut |n, m| {
                    if n == name {
                        m.as_mut_slice()[k] += delta;
                    }
                });
                f(&q)
            };
            out.push((shifted(h) - shifted(-h)) / (2.0 * h));
        }
    }
    out
}

//! Central finite-difference oracle shared by the gradient tests.
#![allow(dead_code)]

pub mod models;
pub mod primitives;

use cslf_core::autodiff::{ParameterStore, Tape, Tensor, Var};
use cslf_core::rng;
use rand::Rng;

pub const H: f64 = 1e-5;
pub const TOL: f64 = 1e-4;

/// Relative error with a floor on the magnitude, so coordinates whose
/// gradient is essentially zero are compared absolutely.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3)
}

/// `sum(out * w)` for a fixed random `w`, so every output entry matters.
pub fn project(tape: &mut Tape, out: Var, seed: u64) -> Var {
    let n = tape.value(out).len();
    let mut r = rng::seeded(seed);
    let w: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let w = tape.constant(tape.shape(out).to_vec(), w).unwrap();
    let p = tape.mul(out, w).unwrap();
    tape.sum(p)
}

pub fn random_tensor(r: &mut rng::Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| r.random_range(lo..hi)).collect()).unwrap()
}

/// Worst relative error of the input gradients of `build` over every input
/// coordinate.
pub fn check_inputs(inputs: &[Tensor], build: impl Fn(&mut Tape, &[Var]) -> Var) -> f64 {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs
        .iter()
        .map(|t| tape.leaf(t.clone().with_requires_grad(true)))
        .collect();
    let loss = build(&mut tape, &vars);
    let grads = tape.backward(loss).unwrap();
    assert_eq!(grads.max_visits_per_node, 1);
    let eval = |ins: &[Tensor]| {
        let mut t = Tape::inference();
        let vs: Vec<Var> = ins.iter().map(|x| t.leaf(x.clone())).collect();
        let l = build(&mut t, &vs);
        t.value(l)[0]
    };
    let mut worst: f64 = 0.0;
    for (i, v) in vars.iter().enumerate() {
        let analytic = grads.get(*v).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; inputs[i].numel()]);
        for k in 0..inputs[i].numel() {
            let mut plus = inputs.to_vec();
            plus[i].data_mut()[k] += H;
            let mut minus = inputs.to_vec();
            minus[i].data_mut()[k] -= H;
            let numeric = (eval(&plus) - eval(&minus)) / (2.0 * H);
            worst = worst.max(rel_err(analytic[k], numeric));
        }
    }
    worst
}

/// Adds uniform noise to every parameter so zero-initialized layers do not
/// hide gradient paths.
pub fn perturb_store(store: &mut ParameterStore, seed: u64, amount: f64) {
    let mut r = rng::seeded(seed);
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        for x in store.tensor_mut(id).data_mut() {
            *x += r.random_range(-amount..amount);
        }
    }
}

/// Worst relative error of parameter gradients, checking up to
/// `per_tensor` random coordinates of every parameter tensor.
pub fn check_params(
    store: &mut ParameterStore,
    per_tensor: usize,
    seed: u64,
    build: impl Fn(&mut Tape, &ParameterStore) -> Var,
) -> f64 {
    let mut tape = Tape::new();
    let loss = build(&mut tape, store);
    store.zero_grad();
    let g = tape.backward_into(loss, store).unwrap();
    assert_eq!(g.max_visits_per_node, 1);
    let mut r = rng::seeded(seed);
    let ids: Vec<_> = store.ids().collect();
    let mut worst: f64 = 0.0;
    for id in ids {
        let n = store.tensor(id).numel();
        let analytic = store.tensor(id).grad().unwrap().to_vec();
        let coords: Vec<usize> = if n <= per_tensor {
            (0..n).collect()
        } else {
            (0..per_tensor).map(|_| r.random_range(0..n)).collect()
        };
        for k in coords {
            let orig = store.tensor(id).data()[k];
            let mut eval = |x: f64| {
                store.tensor_mut(id).data_mut()[k] = x;
                let mut t = Tape::inference();
                let l = build(&mut t, store);
                t.value(l)[0]
            };
            let numeric = (eval(orig + H) - eval(orig - H)) / (2.0 * H);
            store.tensor_mut(id).data_mut()[k] = orig;
            let e = rel_err(analytic[k], numeric);
            assert!(e < TOL, "{}[{k}]: analytic {} numeric {numeric}", store.name(id), analytic[k]);
            worst = worst.max(e);
        }
    }
    worst
}

//! Finite-difference checks of every tape primitive.

use super::{check_inputs, project, random_tensor};
use cslf_core::autodiff::ConvSpec;
use cslf_core::rng;

fn conv_reference_shape(h: usize, spec: ConvSpec) -> usize {
    (h + 2 * spec.padding - spec.kernel) / spec.stride + 1
}

/// Runs one primitive's finite-difference check.
pub fn primitive_error(name: &str, seed: u64) -> f64 {
    let mut r = rng::seeded(seed);
    let pseed = seed ^ 0x55;
    match name {
        "matmul" => {
            let a = random_tensor(&mut r, &[3, 4], -1.0, 1.0);
            let b = random_tensor(&mut r, &[4, 2], -1.0, 1.0);
            check_inputs(&[a, b], |t, v| {
                let m = t.matmul(v[0], v[1]).unwrap();
                project(t, m, pseed)
            })
        }
        "add" | "sub" | "mul" => {
            let a = random_tensor(&mut r, &[2, 3], -1.0, 1.0);
            let b = random_tensor(&mut r, &[2, 3], -1.0, 1.0);
            check_inputs(&[a, b], |t, v| {
                let m = match name {
                    "add" => t.add(v[0], v[1]),
                    "sub" => t.sub(v[0], v[1]),
                    _ => t.mul(v[0], v[1]),
                }
                .unwrap();
                project(t, m, pseed)
            })
        }
        "add_bias" => {
            let a = random_tensor(&mut r, &[4, 3], -1.0, 1.0);
            let b = random_tensor(&mut r, &[3], -1.0, 1.0);
            check_inputs(&[a, b], |t, v| {
                let m = t.add_bias(v[0], v[1]).unwrap();
                project(t, m, pseed)
            })
        }
        "relu" | "abs" => {
            // keep inputs away from the kink at 0
            let mut a = random_tensor(&mut r, &[10], 0.05, 1.0);
            for (i, x) in a.data_mut().iter_mut().enumerate() {
                if i % 2 == 0 {
                    *x = -*x;
                }
            }
            check_inputs(&[a], |t, v| {
                let m = if name == "relu" { t.relu(v[0]) } else { t.abs(v[0]) };
                project(t, m, pseed)
            })
        }
        "sigmoid" | "exp" | "scale" | "add_scalar" | "mean" | "sum" => {
            let a = random_tensor(&mut r, &[3, 3], -2.0, 2.0);
            check_inputs(&[a], |t, v| {
                let m = match name {
                    "sigmoid" => t.sigmoid(v[0]),
                    "exp" => t.exp(v[0]),
                    "scale" => t.scale(v[0], -1.7),
                    "add_scalar" => t.add_scalar(v[0], 0.3),
                    "mean" => t.mean(v[0]),
                    _ => t.sum(v[0]),
                };
                project(t, m, pseed)
            })
        }
        "log" => {
            let a = random_tensor(&mut r, &[6], 0.2, 3.0);
            check_inputs(&[a], |t, v| {
                let m = t.log(v[0]);
                project(t, m, pseed)
            })
        }
        "concat" => {
            let a = random_tensor(&mut r, &[3, 2], -1.0, 1.0);
            let b = random_tensor(&mut r, &[3, 4], -1.0, 1.0);
            check_inputs(&[a, b], |t, v| {
                let m = t.concat(&[v[0], v[1]]).unwrap();
                project(t, m, pseed)
            })
        }
        "repeat_rows" => {
            let a = random_tensor(&mut r, &[2, 3], -1.0, 1.0);
            check_inputs(&[a], |t, v| {
                let m = t.repeat_rows(v[0], 4).unwrap();
                project(t, m, pseed)
            })
        }
        "max_pool_rows" => {
            // distinct values keep the argmax stable under perturbation
            let a = random_tensor(&mut r, &[6, 3], -1.0, 1.0);
            check_inputs(&[a], |t, v| {
                let m = t.max_pool_rows(v[0], 3).unwrap();
                project(t, m, pseed)
            })
        }
        "conv2d" => {
            let spec = ConvSpec {
                kernel: 3,
                stride: 2,
                padding: 1,
            };
            assert_eq!(spec.output_size(7), conv_reference_shape(7, spec));
            let x = random_tensor(&mut r, &[2, 7, 7, 2], -1.0, 1.0);
            let w = random_tensor(&mut r, &[3 * 3 * 2, 3], -1.0, 1.0);
            check_inputs(&[x, w], |t, v| {
                let m = t.conv2d(v[0], v[1], spec).unwrap();
                project(t, m, pseed)
            })
        }
        "global_avg_pool" => {
            let x = random_tensor(&mut r, &[2, 3, 3, 4], -1.0, 1.0);
            check_inputs(&[x], |t, v| {
                let m = t.global_avg_pool(v[0]).unwrap();
                project(t, m, pseed)
            })
        }
        "reshape" => {
            let x = random_tensor(&mut r, &[2, 6], -1.0, 1.0);
            check_inputs(&[x], |t, v| {
                let m = t.reshape(v[0], vec![3, 4]).unwrap();
                project(t, m, pseed)
            })
        }
        _ => unreachable!("{name}"),
    }
}

pub const PRIMITIVES: [&str; 20] = [
    "matmul",
    "add",
    "sub",
    "mul",
    "add_bias",
    "relu",
    "abs",
    "sigmoid",
    "exp",
    "log",
    "scale",
    "add_scalar",
    "mean",
    "sum",
    "concat",
    "repeat_rows",
    "max_pool_rows",
    "conv2d",
    "global_avg_pool",
    "reshape",
];

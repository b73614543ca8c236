//! Test-only oracles, independent of the library's implementation paths.
#![allow(dead_code)]

use dvs_core::{LayerSpec, LayerStack};
use rand::Rng;

/// O(n^3) line-of-sight check: every intermediate point strictly below the
/// chord from `i` to `j`.
pub fn brute_force_visible(values: &[f64], i: usize, j: usize) -> bool {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    (i + 1..j).all(|t| {
        let chord = values[j] + (values[i] - values[j]) * (j - t) as f64 / (j - i) as f64;
        values[t] < chord
    })
}

pub fn brute_force_adjacency(values: &[f64]) -> Vec<Vec<bool>> {
    let n = values.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| i != j && brute_force_visible(values, i, j))
                .collect()
        })
        .collect()
}

/// Mean of the values each node sees, from the brute-force adjacency.
pub fn brute_force_zip(values: &[f64]) -> Vec<f64> {
    let a = brute_force_adjacency(values);
    a.iter()
        .map(|row| {
            let seen: Vec<f64> = row
                .iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .map(|(j, _)| values[j])
                .collect();
            seen.iter().sum::<f64>() / seen.len() as f64
        })
        .collect()
}

/// ReLU sign pattern and pooling winners of one forward pass, plus the
/// smallest distance to a kink.
pub fn kink_state(stack: &LayerStack, input: &[f64]) -> (Vec<usize>, f64) {
    let (_, tape) = stack.forward(input).unwrap();
    let mut signature = Vec::new();
    let mut margin = f64::INFINITY;
    for (k, layer) in stack.layers().iter().enumerate() {
        let x = tape.layer_input(k);
        match layer {
            LayerSpec::Relu => {
                for &v in x {
                    signature.push(usize::from(v > 0.0));
                    margin = margin.min(v.abs());
                }
            }
            LayerSpec::MaxPool1d { pool_size } => {
                signature.extend_from_slice(tape.pool_argmax(k));
                let shape = stack.shape_at(k);
                let out_len = shape.len / pool_size;
                for c in 0..shape.channels {
                    for t in 0..out_len {
                        let start = c * shape.len + t * pool_size;
                        let mut vals: Vec<f64> = x[start..start + pool_size].to_vec();
                        vals.sort_by(|a, b| b.total_cmp(a));
                        // two ReLU-clamped zeros tie exactly but route no gradient
                        if vals.len() > 1 && vals[0] != 0.0 {
                            margin = margin.min(vals[0] - vals[1]);
                        }
                    }
                }
            }
            _ => {}
        }
    }
    (signature, margin)
}

pub struct GradCheck {
    pub passed: usize,
    pub total: usize,
    pub resampled: usize,
    pub worst: f64,
}

pub const KINK_MARGIN: f64 = 1e-7;
pub const REL_TOL: f64 = 1e-4;
/// Differences this small count as agreement regardless of scale.
pub const ABS_FLOOR: f64 = 1e-10;

/// Central differences with `h = 1e-5 * max(1, |p|)` on `probes` random
/// (input, parameter) pairs. Probes whose input sits within `KINK_MARGIN`
/// of a ReLU/pool kink, or whose perturbation crosses one, are redrawn.
pub fn finite_difference_check(
    template: &LayerStack,
    probes: usize,
    rng: &mut impl Rng,
) -> GradCheck {
    let mut report = GradCheck {
        passed: 0,
        total: 0,
        resampled: 0,
        worst: 0.0,
    };
    while report.total < probes {
        assert!(
            report.resampled < 100 * probes,
            "kink resampling did not converge"
        );
        let mut stack = template.clone();
        for p in stack.params_mut() {
            *p = rng.random_range(-0.5..0.5);
        }
        let input: Vec<f64> = (0..stack.input_len())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let (sig, margin) = kink_state(&stack, &input);
        if margin < KINK_MARGIN {
            report.resampled += 1;
            continue;
        }
        let (_, tape) = stack.forward(&input).unwrap();
        let grads = stack.backward(tape, 1.0).unwrap();

        let idx = rng.random_range(0..stack.param_count());
        let p0 = stack.params()[idx];
        let h = 1e-5 * p0.abs().max(1.0);
        let mut plus = stack.clone();
        plus.params_mut()[idx] = p0 + h;
        let mut minus = stack.clone();
        minus.params_mut()[idx] = p0 - h;
        if kink_state(&plus, &input).0 != sig || kink_state(&minus, &input).0 != sig {
            report.resampled += 1;
            continue;
        }
        let numeric = (plus.predict(&input).unwrap() - minus.predict(&input).unwrap()) / (2.0 * h);
        let analytic = grads[idx];
        let diff = (analytic - numeric).abs();
        let rel = diff / analytic.abs().max(numeric.abs()).max(f64::MIN_POSITIVE);
        report.total += 1;
        if diff < ABS_FLOOR || rel < REL_TOL {
            report.passed += 1;
        } else {
            report.worst = report.worst.max(rel);
        }
    }
    report
}

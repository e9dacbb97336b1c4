//! Brute-force reference implementations shared by the oracle tests.
#![allow(dead_code)]

use pixaug_core::nn::{Activation, Gradients, LayerSpec, Mlp};
use rand::Rng;

/// `max_t |F_x(t) - F_y(t)| * n * m`, scanning every pooled point.
pub fn ks_scaled_oracle(x: &[f64], y: &[f64]) -> u64 {
    let (n, m) = (x.len() as i64, y.len() as i64);
    x.iter()
        .chain(y)
        .map(|&t| {
            let cx = x.iter().filter(|&&v| v <= t).count() as i64;
            let cy = y.iter().filter(|&&v| v <= t).count() as i64;
            (cx * m - cy * n).unsigned_abs()
        })
        .max()
        .unwrap_or(0)
}

pub fn ks_statistic_oracle(x: &[f64], y: &[f64]) -> f64 {
    ks_scaled_oracle(x, y) as f64 / (x.len() * y.len()) as f64
}

/// Exact permutation p-value: every way of choosing which pooled values form
/// the first sample, counted directly.
pub fn ks_exact_p_oracle(x: &[f64], y: &[f64]) -> f64 {
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let (n, total) = (x.len(), pooled.len());
    let observed = ks_scaled_oracle(x, y);
    let (mut hits, mut count) = (0u64, 0u64);
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(total - n);
    for mask in 0u32..(1 << total) {
        if mask.count_ones() as usize != n {
            continue;
        }
        a.clear();
        b.clear();
        for (i, &v) in pooled.iter().enumerate() {
            if mask >> i & 1 == 1 {
                a.push(v);
            } else {
                b.push(v);
            }
        }
        count += 1;
        if ks_scaled_oracle(&a, &b) >= observed {
            hits += 1;
        }
    }
    hits as f64 / count as f64
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Ball Divergence written straight from its definition.
pub fn ball_oracle(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let (n, m) = (x.len() as f64, y.len() as f64);
    let mut ax = 0.0;
    for xi in x {
        for xj in x {
            let r = dist(xj, xi);
            let a = x.iter().filter(|u| dist(u, xi) <= r).count() as f64 / n;
            let b = y.iter().filter(|v| dist(v, xi) <= r).count() as f64 / m;
            ax += (a - b) * (a - b);
        }
    }
    let mut cy = 0.0;
    for yk in y {
        for yl in y {
            let r = dist(yl, yk);
            let a = x.iter().filter(|u| dist(u, yk) <= r).count() as f64 / n;
            let b = y.iter().filter(|v| dist(v, yk) <= r).count() as f64 / m;
            cy += (a - b) * (a - b);
        }
    }
    ax / (n * n) + cy / (m * m)
}

/// Continuous values, or small integers when `ties` so equal values and
/// equal distances are common.
pub fn values<R: Rng>(rng: &mut R, len: usize, ties: bool) -> Vec<f64> {
    (0..len)
        .map(|_| {
            if ties {
                f64::from(rng.gen_range(0..4u8))
            } else {
                rng.gen_range(-2.0..2.0)
            }
        })
        .collect()
}

pub fn rows<R: Rng>(rng: &mut R, len: usize, dim: usize, ties: bool) -> Vec<Vec<f64>> {
    (0..len).map(|_| values(rng, dim, ties)).collect()
}

/// Published accuracy rows: sensitivity, specificity, ppv, npv, accuracy, kappa.
pub const PUBLISHED_ROWS: [[f64; 6]; 4] = [
    [0.9860, 0.8010, 0.9253, 0.9581, 0.9331, 0.8277],
    [0.9852, 0.8795, 0.9534, 0.9596, 0.9550, 0.8869],
    [0.9906, 0.9280, 0.9717, 0.9753, 0.9727, 0.9322],
    [0.9994, 0.9955, 0.9982, 0.9985, 0.9983, 0.9958],
];

/// Integer counts `(tp, fn, tn, fp)` closest to the given rates for class
/// sizes `positives` and `negatives`.
pub fn reconstruct(sens: f64, spec: f64, positives: u64, negatives: u64) -> (u64, u64, u64, u64) {
    let tp = (sens * positives as f64).round() as u64;
    let tn = (spec * negatives as f64).round() as u64;
    (tp, positives - tp, tn, negatives - tn)
}

const H: f64 = 1e-5;

/// Visits every parameter as (layer, is_weight, index).
fn params(net: &Mlp) -> Vec<(usize, bool, usize)> {
    let mut out = Vec::new();
    for (l, layer) in net.layers().iter().enumerate() {
        out.extend((0..layer.weights().len()).map(|i| (l, true, i)));
        out.extend((0..layer.biases().len()).map(|i| (l, false, i)));
    }
    out
}

fn nudge(net: &Mlp, (l, w, i): (usize, bool, usize), delta: f64) -> Mlp {
    let mut n = net.clone();
    let layer = &mut n.layers_mut()[l];
    if w {
        layer.weights_mut()[i] += delta;
    } else {
        layer.biases_mut()[i] += delta;
    }
    n
}

fn analytic(g: &Gradients, (l, w, i): (usize, bool, usize)) -> f64 {
    if w {
        g.weights[l][i]
    } else {
        g.biases[l][i]
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

/// Worst relative error over all parameters of `net`.
pub fn check<F: Fn(&Mlp) -> f64>(net: &Mlp, grads: &Gradients, loss: F) -> f64 {
    params(net)
        .into_iter()
        .map(|p| {
            let numeric = (loss(&nudge(net, p, H)) - loss(&nudge(net, p, -H))) / (2.0 * H);
            rel_err(analytic(grads, p), numeric)
        })
        .fold(0.0, f64::max)
}

pub fn random_net(rng: &mut impl Rng, out_sigmoid: bool) -> Mlp {
    let depth = rng.gen_range(1..=3);
    let mut widths: Vec<usize> = (0..=depth).map(|_| rng.gen_range(1..=8)).collect();
    if out_sigmoid {
        widths[depth] = 1;
    }
    let specs: Vec<LayerSpec> = (0..depth)
        .map(|l| {
            let act = if l + 1 == depth && out_sigmoid {
                Activation::Sigmoid
            } else {
                // ReLU kinks break finite differences only on a measure-zero set
                [Activation::Sigmoid, Activation::Relu, Activation::Identity][rng.gen_range(0..3)]
            };
            LayerSpec::new(widths[l], widths[l + 1], act)
        })
        .collect();
    let mut net = Mlp::init(&specs, rng).unwrap();
    for layer in net.layers_mut() {
        for b in layer.biases_mut() {
            *b = rng.gen_range(-0.5..0.5);
        }
    }
    net
}

/// Worst relative error between backprop and central differences over 50
/// random networks, cycling through the losses, with weight decay on every
/// other network.
pub fn fifty_network_gradient_check(seed: u64) -> f64 {
    let mut rng = pixaug_core::rng::rng_from_seed(seed);
    let losses = [
        pixaug_core::nn::Loss::BinaryCrossEntropy,
        pixaug_core::nn::Loss::GeneratorNonSaturating,
        pixaug_core::nn::Loss::GeneratorSaturating,
    ];
    let mut worst = 0.0f64;
    for trial in 0..50 {
        let net = random_net(&mut rng, true);
        let loss = losses[trial % 3];
        let lambda = if trial % 2 == 0 { 0.0 } else { rng.gen_range(0.05..0.5) };
        let batch: Vec<(Vec<f64>, Vec<f64>)> = (0..rng.gen_range(1..6))
            .map(|_| {
                let x = (0..net.input_width()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let t = vec![f64::from(rng.gen_range(0..2u8))];
                (x, t)
            })
            .collect();
        let eval = |n: &Mlp| {
            n.backward(batch.iter().map(|(x, t)| (x.as_slice(), t.as_slice())), loss, lambda)
                .unwrap()
                .1
        };
        let (grads, _) = net
            .backward(batch.iter().map(|(x, t)| (x.as_slice(), t.as_slice())), loss, lambda)
            .unwrap();
        let err = check(&net, &grads, eval);
        worst = worst.max(err);
    }
    worst
}


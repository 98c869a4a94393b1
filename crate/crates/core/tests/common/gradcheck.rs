//! Backpropagation against central finite differences.

use cpmp_dlts::nn::{example_gradients, Architecture, Head, LayerKind, Network, Target};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-4;
pub const TOLERANCE: f64 = 1e-5;

/// Loss computed from the forward pass alone.
pub fn loss(net: &Network, x: &[f64], target: Target) -> f64 {
    let out = net.forward(x).unwrap();
    match target {
        Target::Class(c) => -out[c].ln(),
        Target::Value(y) => (out[0] - y).powi(2),
    }
}

pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm =
        a.iter().map(|x| x * x).sum::<f64>().sqrt() + b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        0.0
    } else {
        diff / norm
    }
}

fn param(net: &mut Network, layer: usize, i: usize) -> &mut f64 {
    let layer = &mut net.layers_mut()[layer];
    let nw = layer.weights.len();
    if i < nw {
        &mut layer.weights[i]
    } else {
        &mut layer.biases[i - nw]
    }
}

/// Relative error of each layer's gradient.
pub fn check(net: &mut Network, x: &[f64], target: Target) -> Vec<(LayerKind, f64)> {
    let (_, analytic) = example_gradients(net, x, target).unwrap();
    let mut out = Vec::new();
    for (l, grad) in analytic.iter().enumerate() {
        let count = grad.weights.len() + grad.biases.len();
        let mut numeric = Vec::with_capacity(count);
        for i in 0..count {
            let orig = *param(net, l, i);
            *param(net, l, i) = orig + STEP;
            let up = loss(net, x, target);
            *param(net, l, i) = orig - STEP;
            let down = loss(net, x, target);
            *param(net, l, i) = orig;
            numeric.push((up - down) / (2.0 * STEP));
        }
        let analytic: Vec<f64> = grad.weights.iter().chain(&grad.biases).copied().collect();
        out.push((
            net.layers()[l].spec.kind,
            relative_error(&analytic, &numeric),
        ));
    }
    out
}

pub fn random_case(head: Head, seed: u64) -> (Network, Vec<f64>, Target) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stacks = rng.gen_range(2..=4);
    let tiers = rng.gen_range(2..=4);
    let arch = Architecture::uniform(
        rng.gen_range(1..=2),
        rng.gen_range(1..=4),
        rng.gen_range(2..=3),
        rng.gen_range(2..=6),
    )
    .unwrap();
    let mut net = Network::new(stacks, tiers, head, 1.0, &arch, seed).unwrap();
    // non-trivial tier weights; non-zero biases keep pre-activations off
    // the ReLU kink
    for w in net.layers_mut()[0].weights.iter_mut() {
        *w = rng.gen_range(0.5..1.5);
    }
    for layer in net.layers_mut() {
        for b in layer.biases.iter_mut() {
            *b = rng.gen_range(0.05..0.3);
        }
    }
    let x: Vec<f64> = (0..stacks * tiers)
        .map(|_| rng.gen_range(0.0..1.0))
        .collect();
    let target = match head {
        Head::Policy => Target::Class(rng.gen_range(0..stacks * (stacks - 1))),
        Head::Value => Target::Value(rng.gen_range(0.0..10.0)),
    };
    (net, x, target)
}

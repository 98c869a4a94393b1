use serde::{Deserialize, Serialize};

use super::layer::LayerGrad;
use super::network::{Cache, Network, Target};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moments for every parameter of one network, plus scratch buffers
/// reused across minibatches.
#[derive(Debug)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    first: Vec<LayerGrad>,
    second: Vec<LayerGrad>,
    grads: Vec<LayerGrad>,
    cache: Cache,
}

impl AdamState {
    pub fn new(network: &Network, config: AdamConfig) -> Self {
        AdamState {
            config,
            step: 0,
            first: network.zero_grads(),
            second: network.zero_grads(),
            grads: network.zero_grads(),
            cache: Cache::default(),
        }
    }

    pub fn first_moments(&self) -> &[LayerGrad] {
        &self.first
    }

    pub fn second_moments(&self) -> &[LayerGrad] {
        &self.second
    }

    /// Applies one Adam update with the given gradients.
    pub fn apply(&mut self, network: &mut Network, grads: &[LayerGrad]) {
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        self.step += 1;
        let t = self.step as i32;
        let correct1 = 1.0 - beta1.powi(t);
        let correct2 = 1.0 - beta2.powi(t);
        for (((layer, g), m), v) in network
            .layers_mut()
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            let params = layer.weights.iter_mut().chain(layer.biases.iter_mut());
            let gs = g.weights.iter().chain(&g.biases);
            let ms = m.weights.iter_mut().chain(m.biases.iter_mut());
            let vs = v.weights.iter_mut().chain(v.biases.iter_mut());
            for (((p, &g), m), v) in params.zip(gs).zip(ms).zip(vs) {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / correct1;
                let v_hat = *v / correct2;
                *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
    }
}

/// Mean-gradient Adam step over a minibatch. Returns the mean loss of the
/// batch measured before the update.
pub fn backward_and_step(
    network: &mut Network,
    adam: &mut AdamState,
    minibatch: &[(&[f64], Target)],
) -> Result<f64> {
    if minibatch.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if adam.grads.len() != network.layers().len() {
        return Err(Error::ShapeMismatch(
            "optimizer state belongs to another network".into(),
        ));
    }
    let mut grads = std::mem::take(&mut adam.grads);
    grads.iter_mut().for_each(LayerGrad::clear);
    let mut total = 0.0;
    for &(input, target) in minibatch {
        match network.accumulate_gradients(input, target, &mut adam.cache, &mut grads) {
            Ok(loss) => total += loss,
            Err(e) => {
                adam.grads = grads;
                return Err(e);
            }
        }
    }
    let n = minibatch.len() as f64;
    grads.iter_mut().for_each(|g| g.scale(1.0 / n));
    adam.apply(network, &grads);
    adam.grads = grads;
    Ok(total / n)
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layer::{activate, Activation, Layer, LayerGrad, LayerKind, LayerSpec};
use super::loss::PROB_FLOOR;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    /// Softmax over the `S(S-1)` ordered stack pairs.
    Policy,
    /// A single linear output: estimated moves to completion.
    Value,
}

impl Head {
    pub fn output_len(self, stacks: usize) -> usize {
        match self {
            Head::Policy => stacks * (stacks - 1),
            Head::Value => 1,
        }
    }
}

impl std::fmt::Display for Head {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Head::Policy => "policy",
            Head::Value => "value",
        })
    }
}

impl std::str::FromStr for Head {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "policy" => Ok(Head::Policy),
            "value" => Ok(Head::Value),
            _ => Err(Error::Config(format!("unknown network head {s:?}"))),
        }
    }
}

/// Hidden-layer shape: per-stack widths of the locally connected layers
/// (applied after the tier scaling) and widths of the hidden dense layers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub local_widths: Vec<usize>,
    pub dense_widths: Vec<usize>,
}

impl Architecture {
    /// `local_layers` per-stack layers of `local_width` units per stack and
    /// `dense_layers` dense layers counting the output layer, hidden ones
    /// `dense_width` wide.
    pub fn uniform(
        local_layers: usize,
        local_width: usize,
        dense_layers: usize,
        dense_width: usize,
    ) -> Result<Self> {
        if dense_layers == 0 {
            return Err(Error::Config(
                "at least one dense (output) layer is required".into(),
            ));
        }
        if local_width == 0 || dense_width == 0 {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        Ok(Architecture {
            local_widths: vec![local_width; local_layers],
            dense_widths: vec![dense_width; dense_layers - 1],
        })
    }
}

/// Target of a single training example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// Index of the correct output (one-hot).
    Class(usize),
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    stacks: usize,
    tiers: usize,
    scale: f64,
    head: Head,
    layers: Vec<Layer>,
}

/// Forward activations kept for backpropagation.
#[derive(Debug, Default)]
pub(crate) struct Cache {
    z: Vec<Vec<f64>>,
    a: Vec<Vec<f64>>,
    dz: Vec<Vec<f64>>,
}

impl Network {
    /// Builds a randomly initialised network: tier scaling (weights 1), the
    /// per-stack layers, hidden dense layers (ReLU) and the head layer.
    /// Dense and per-stack weights are Glorot-uniform; biases start at 0.
    pub fn new(
        stacks: usize,
        tiers: usize,
        head: Head,
        scale: f64,
        arch: &Architecture,
        seed: u64,
    ) -> Result<Self> {
        if stacks < 2 || tiers == 0 {
            return Err(Error::ShapeMismatch(format!(
                "network needs at least 2 stacks and 1 tier, got {stacks}x{tiers}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        let input = stacks * tiers;
        let mut tier_scale = Layer::zeros(LayerSpec {
            kind: LayerKind::SharedTierScale,
            input,
            output: input,
            groups: stacks,
            activation: Activation::Linear,
        });
        tier_scale.weights.fill(1.0);
        layers.push(tier_scale);

        let mut width = tiers;
        for &w in &arch.local_widths {
            let mut layer = Layer::zeros(LayerSpec {
                kind: LayerKind::LocallyConnectedPerStack,
                input: stacks * width,
                output: stacks * w,
                groups: stacks,
                activation: Activation::Relu,
            });
            glorot(&mut layer.weights, width, w, &mut rng);
            layers.push(layer);
            width = w;
        }

        let mut width = stacks * width;
        let out = head.output_len(stacks);
        let widths = arch
            .dense_widths
            .iter()
            .copied()
            .chain(std::iter::once(out));
        let last = arch.dense_widths.len();
        for (i, w) in widths.enumerate() {
            let activation = match (i == last, head) {
                (false, _) => Activation::Relu,
                (true, Head::Policy) => Activation::Softmax,
                (true, Head::Value) => Activation::Linear,
            };
            let mut layer = Layer::zeros(LayerSpec {
                kind: LayerKind::Dense,
                input: width,
                output: w,
                groups: 1,
                activation,
            });
            glorot(&mut layer.weights, width, w, &mut rng);
            layers.push(layer);
            width = w;
        }
        Network::from_layers(stacks, tiers, scale, head, layers)
    }

    /// Assembles a network from explicit layers, validating the chain.
    pub fn from_layers(
        stacks: usize,
        tiers: usize,
        scale: f64,
        head: Head,
        layers: Vec<Layer>,
    ) -> Result<Self> {
        let net = Network {
            stacks,
            tiers,
            scale,
            head,
            layers,
        };
        net.validate().map_err(Error::ShapeMismatch)?;
        Ok(net)
    }

    fn validate(&self) -> Result<(), String> {
        if self.stacks < 2 || self.tiers == 0 {
            return Err(format!(
                "unsupported bay shape {}x{}",
                self.stacks, self.tiers
            ));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(format!("input scale must be positive, got {}", self.scale));
        }
        let last = self
            .layers
            .len()
            .checked_sub(1)
            .ok_or("network has no layers")?;
        let mut width = self.stacks * self.tiers;
        for (i, layer) in self.layers.iter().enumerate() {
            let spec = &layer.spec;
            spec.check().map_err(|e| format!("layer {i}: {e}"))?;
            if spec.input != width {
                return Err(format!(
                    "layer {i}: expects {} inputs, gets {width}",
                    spec.input
                ));
            }
            match spec.kind {
                LayerKind::SharedTierScale if i != 0 => {
                    return Err("tier scaling is only allowed as the first layer".into())
                }
                LayerKind::SharedTierScale | LayerKind::LocallyConnectedPerStack
                    if spec.groups != self.stacks =>
                {
                    return Err(format!(
                        "layer {i}: {} groups for {} stacks",
                        spec.groups, self.stacks
                    ))
                }
                _ => {}
            }
            if spec.activation == Activation::Softmax && i != last {
                return Err("softmax is only allowed on the output layer".into());
            }
            if layer.weights.len() != spec.weight_count() || layer.biases.len() != spec.bias_count()
            {
                return Err(format!(
                    "layer {i}: parameter count does not match its shape"
                ));
            }
            width = spec.output;
        }
        if width != self.head.output_len(self.stacks) {
            return Err(format!(
                "{:?} head needs {} outputs, network produces {width}",
                self.head,
                self.head.output_len(self.stacks)
            ));
        }
        let expected = match self.head {
            Head::Policy => Activation::Softmax,
            Head::Value => Activation::Linear,
        };
        if self.layers[last].spec.activation != expected {
            return Err(format!("{:?} head must end in {expected:?}", self.head));
        }
        Ok(())
    }

    pub fn stacks(&self) -> usize {
        self.stacks
    }

    pub fn tiers(&self) -> usize {
        self.tiers
    }

    /// Group values are divided by this before entering the network.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_len(&self) -> usize {
        self.stacks * self.tiers
    }

    pub fn output_len(&self) -> usize {
        self.head.output_len(self.stacks)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Fails with `ShapeMismatch` unless the network was built for `S x T`.
    pub fn check_dims(&self, stacks: usize, tiers: usize) -> Result<()> {
        if (self.stacks, self.tiers) != (stacks, tiers) {
            return Err(Error::ShapeMismatch(format!(
                "network is for {}x{} bays, instance is {stacks}x{tiers}",
                self.stacks, self.tiers
            )));
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.activations(input)?.pop().expect("network has layers"))
    }

    /// Output of every layer, in order.
    pub fn activations(&self, input: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(input)?;
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let x = out.last().map_or(input, Vec::as_slice);
            let mut z = vec![0.0; layer.spec.output];
            layer.affine(x, &mut z);
            let mut a = vec![0.0; z.len()];
            activate(layer.spec.activation, &z, &mut a);
            out.push(a);
        }
        Ok(out)
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_len() {
            return Err(Error::ShapeMismatch(format!(
                "input has {} values, network expects {}",
                input.len(),
                self.input_len()
            )));
        }
        Ok(())
    }

    pub(crate) fn forward_cached<'c>(&self, input: &[f64], cache: &'c mut Cache) -> &'c [f64] {
        let n = self.layers.len();
        if cache.a.len() != n + 1 {
            cache.a = std::iter::once(vec![0.0; self.input_len()])
                .chain(self.layers.iter().map(|l| vec![0.0; l.spec.output]))
                .collect();
            cache.z = self
                .layers
                .iter()
                .map(|l| vec![0.0; l.spec.output])
                .collect();
            cache.dz = cache.z.clone();
        }
        cache.a[0].copy_from_slice(input);
        for (i, layer) in self.layers.iter().enumerate() {
            let (before, after) = cache.a.split_at_mut(i + 1);
            layer.affine(&before[i], &mut cache.z[i]);
            activate(layer.spec.activation, &cache.z[i], &mut after[0]);
        }
        &cache.a[n]
    }

    /// Runs forward and backward for one example, adds the parameter
    /// gradients of its loss into `grads`, and returns the loss
    /// (cross-entropy for the policy head, squared error for the value head).
    pub(crate) fn accumulate_gradients(
        &self,
        input: &[f64],
        target: Target,
        cache: &mut Cache,
        grads: &mut [LayerGrad],
    ) -> Result<f64> {
        self.check_input(input)?;
        let out = self.forward_cached(input, cache).to_vec();
        let n = self.layers.len();
        let loss = {
            let dz = &mut cache.dz[n - 1];
            match (self.head, target) {
                (Head::Policy, Target::Class(c)) if c < out.len() => {
                    // softmax + cross-entropy: dL/dz = p - onehot
                    dz.copy_from_slice(&out);
                    dz[c] -= 1.0;
                    -out[c].max(PROB_FLOOR).ln()
                }
                (Head::Value, Target::Value(y)) => {
                    let diff = out[0] - y;
                    dz[0] = 2.0 * diff;
                    diff * diff
                }
                (head, target) => {
                    return Err(Error::ShapeMismatch(format!(
                        "target {target:?} does not fit a {head:?} head with {} outputs",
                        out.len()
                    )))
                }
            }
        };

        for i in (0..n).rev() {
            let layer = &self.layers[i];
            let (lower, upper) = cache.dz.split_at_mut(i);
            let dz = &upper[0];
            if i == 0 {
                layer.backward(&cache.a[0], dz, &mut grads[0], None);
                break;
            }
            let dx = &mut lower[i - 1];
            layer.backward(&cache.a[i], dz, &mut grads[i], Some(dx));
            // through the activation of layer i-1
            match self.layers[i - 1].spec.activation {
                Activation::Relu => {
                    for (d, &z) in dx.iter_mut().zip(&cache.z[i - 1]) {
                        if z <= 0.0 {
                            *d = 0.0;
                        }
                    }
                }
                Activation::Linear => {}
                Activation::Softmax => unreachable!("softmax only on the output layer"),
            }
        }
        Ok(loss)
    }

    pub fn zero_grads(&self) -> Vec<LayerGrad> {
        self.layers.iter().map(LayerGrad::zeros_like).collect()
    }
}

fn glorot(weights: &mut [f64], fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for w in weights {
        *w = rng.gen_range(-limit..=limit);
    }
}

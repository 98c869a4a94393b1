use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerKind {
    /// One weight per tier, applied to that tier in every stack.
    SharedTierScale,
    /// An independent dense block per stack; stacks never mix.
    LocallyConnectedPerStack,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Linear,
    Softmax,
}

/// Shape of a layer. `groups` is the number of stacks for the per-stack
/// kinds and 1 for dense layers; `input` and `output` are total widths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub input: usize,
    pub output: usize,
    pub groups: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn weight_count(&self) -> usize {
        match self.kind {
            LayerKind::SharedTierScale => self.input / self.groups,
            LayerKind::LocallyConnectedPerStack => {
                self.groups * (self.input / self.groups) * (self.output / self.groups)
            }
            LayerKind::Dense => self.input * self.output,
        }
    }

    pub fn bias_count(&self) -> usize {
        match self.kind {
            LayerKind::SharedTierScale => 0,
            LayerKind::LocallyConnectedPerStack | LayerKind::Dense => self.output,
        }
    }

    /// Structural consistency of a single layer.
    pub fn check(&self) -> Result<(), String> {
        if self.groups == 0 || self.input == 0 || self.output == 0 {
            return Err(format!("{:?}: zero-sized layer", self.kind));
        }
        match self.kind {
            LayerKind::SharedTierScale if self.input != self.output => {
                Err("tier scaling must preserve width".into())
            }
            LayerKind::SharedTierScale | LayerKind::LocallyConnectedPerStack
                if !self.input.is_multiple_of(self.groups)
                    || !self.output.is_multiple_of(self.groups) =>
            {
                Err(format!(
                    "{:?}: widths {}->{} not divisible by {} stacks",
                    self.kind, self.input, self.output, self.groups
                ))
            }
            LayerKind::Dense if self.groups != 1 => Err("dense layer with groups != 1".into()),
            _ => Ok(()),
        }
    }
}

/// A layer with its parameters.
///
/// Weight layouts:
/// - tier scale: `w[t]`
/// - per stack: block `s` at `s * out_w * in_w`, row-major `[o][i]` inside
/// - dense: row-major `[o][i]`
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub spec: LayerSpec,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn zeros(spec: LayerSpec) -> Self {
        Layer {
            weights: vec![0.0; spec.weight_count()],
            biases: vec![0.0; spec.bias_count()],
            spec,
        }
    }

    /// Pre-activation output `z` for `x`.
    pub(crate) fn affine(&self, x: &[f64], z: &mut [f64]) {
        let spec = &self.spec;
        match spec.kind {
            LayerKind::SharedTierScale => {
                let tiers = self.weights.len();
                for (i, (zi, xi)) in z.iter_mut().zip(x).enumerate() {
                    *zi = self.weights[i % tiers] * xi;
                }
            }
            LayerKind::LocallyConnectedPerStack => {
                let in_w = spec.input / spec.groups;
                let out_w = spec.output / spec.groups;
                for s in 0..spec.groups {
                    let xs = &x[s * in_w..(s + 1) * in_w];
                    let block = &self.weights[s * out_w * in_w..(s + 1) * out_w * in_w];
                    for o in 0..out_w {
                        let row = &block[o * in_w..(o + 1) * in_w];
                        z[s * out_w + o] = self.biases[s * out_w + o] + dot(row, xs);
                    }
                }
            }
            LayerKind::Dense => {
                for (o, zo) in z.iter_mut().enumerate() {
                    let row = &self.weights[o * spec.input..(o + 1) * spec.input];
                    *zo = self.biases[o] + dot(row, x);
                }
            }
        }
    }

    /// Accumulates parameter gradients for upstream gradient `dz` at input
    /// `x`, and writes the gradient with respect to `x` into `dx` if given.
    pub(crate) fn backward(
        &self,
        x: &[f64],
        dz: &[f64],
        grad: &mut LayerGrad,
        dx: Option<&mut [f64]>,
    ) {
        let spec = &self.spec;
        match spec.kind {
            LayerKind::SharedTierScale => {
                let tiers = self.weights.len();
                for (i, (&d, &xi)) in dz.iter().zip(x).enumerate() {
                    grad.weights[i % tiers] += d * xi;
                }
                if let Some(dx) = dx {
                    for (i, (dxi, &d)) in dx.iter_mut().zip(dz).enumerate() {
                        *dxi = self.weights[i % tiers] * d;
                    }
                }
            }
            LayerKind::LocallyConnectedPerStack => {
                let in_w = spec.input / spec.groups;
                let out_w = spec.output / spec.groups;
                for s in 0..spec.groups {
                    let xs = &x[s * in_w..(s + 1) * in_w];
                    let off = s * out_w * in_w;
                    for o in 0..out_w {
                        let d = dz[s * out_w + o];
                        grad.biases[s * out_w + o] += d;
                        if d != 0.0 {
                            let row = &mut grad.weights[off + o * in_w..off + (o + 1) * in_w];
                            axpy(d, xs, row);
                        }
                    }
                }
                if let Some(dx) = dx {
                    dx.fill(0.0);
                    for s in 0..spec.groups {
                        let off = s * out_w * in_w;
                        let dxs = &mut dx[s * in_w..(s + 1) * in_w];
                        for o in 0..out_w {
                            let d = dz[s * out_w + o];
                            if d != 0.0 {
                                axpy(d, &self.weights[off + o * in_w..off + (o + 1) * in_w], dxs);
                            }
                        }
                    }
                }
            }
            LayerKind::Dense => {
                for (o, &d) in dz.iter().enumerate() {
                    grad.biases[o] += d;
                    if d != 0.0 {
                        axpy(
                            d,
                            x,
                            &mut grad.weights[o * spec.input..(o + 1) * spec.input],
                        );
                    }
                }
                if let Some(dx) = dx {
                    dx.fill(0.0);
                    for (o, &d) in dz.iter().enumerate() {
                        if d != 0.0 {
                            axpy(d, &self.weights[o * spec.input..(o + 1) * spec.input], dx);
                        }
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl LayerGrad {
    pub fn zeros_like(layer: &Layer) -> Self {
        LayerGrad {
            weights: vec![0.0; layer.weights.len()],
            biases: vec![0.0; layer.biases.len()],
        }
    }

    pub fn clear(&mut self) {
        self.weights.fill(0.0);
        self.biases.fill(0.0);
    }

    pub fn scale(&mut self, factor: f64) {
        self.weights.iter_mut().for_each(|g| *g *= factor);
        self.biases.iter_mut().for_each(|g| *g *= factor);
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn activate(act: Activation, z: &[f64], a: &mut [f64]) {
    match act {
        Activation::Relu => {
            for (ai, &zi) in a.iter_mut().zip(z) {
                *ai = zi.max(0.0);
            }
        }
        Activation::Linear => a.copy_from_slice(z),
        Activation::Softmax => softmax(z, a),
    }
}

/// Numerically stable softmax (max-logit subtraction).
pub fn softmax(z: &[f64], out: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &zi) in out.iter_mut().zip(z) {
        *o = (zi - max).exp();
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
}

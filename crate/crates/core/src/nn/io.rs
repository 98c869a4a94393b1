//! Binary weights file, all integers and floats little-endian:
//!
//! ```text
//! magic        8 bytes  "CPMPNN\0\0"
//! version      u32      currently 1
//! stacks       u32
//! tiers        u32
//! scale        f64      input scaling constant
//! head         u8       0 = policy, 1 = value
//! layer count  u32
//! per layer:
//!   kind       u8       0 = tier scale, 1 = per stack, 2 = dense
//!   activation u8       0 = relu, 1 = linear, 2 = softmax
//!   input      u32
//!   output     u32
//!   groups     u32
//!   n_weights  u64
//!   n_biases   u64
//!   weights    n_weights x f64
//!   biases     n_biases x f64
//! ```

use std::fs;
use std::path::Path;

use super::layer::{Activation, Layer, LayerKind, LayerSpec};
use super::network::{Head, Network};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"CPMPNN\0\0";
pub const WEIGHTS_VERSION: u32 = 1;

pub fn encode_weights(net: &Network) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 8 * net.parameter_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
    out.extend_from_slice(&(net.stacks() as u32).to_le_bytes());
    out.extend_from_slice(&(net.tiers() as u32).to_le_bytes());
    out.extend_from_slice(&net.scale().to_le_bytes());
    out.push(match net.head() {
        Head::Policy => 0,
        Head::Value => 1,
    });
    out.extend_from_slice(&(net.layers().len() as u32).to_le_bytes());
    for layer in net.layers() {
        let spec = &layer.spec;
        out.push(match spec.kind {
            LayerKind::SharedTierScale => 0,
            LayerKind::LocallyConnectedPerStack => 1,
            LayerKind::Dense => 2,
        });
        out.push(match spec.activation {
            Activation::Relu => 0,
            Activation::Linear => 1,
            Activation::Softmax => 2,
        });
        for v in [spec.input, spec.output, spec.groups] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&(layer.weights.len() as u64).to_le_bytes());
        out.extend_from_slice(&(layer.biases.len() as u64).to_le_bytes());
        for v in layer.weights.iter().chain(&layer.biases) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let Some(end) = end else {
            return Err(Error::Parse {
                path: None,
                line: 0,
                msg: format!(
                    "truncated weights file while reading {what} at byte {}",
                    self.pos
                ),
            });
        };
        let slice = &self.buf[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: u64, what: &str) -> Result<Vec<f64>> {
        let n = usize::try_from(n).map_err(|_| bad(what))?;
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| bad(what))?, what)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

fn bad(what: &str) -> Error {
    Error::Parse {
        path: None,
        line: 0,
        msg: format!("invalid {what} in weights file"),
    }
}

pub fn decode_weights(buf: &[u8]) -> Result<Network> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8, "magic")? != MAGIC {
        return Err(bad("magic"));
    }
    let version = r.u32("version")?;
    if version != WEIGHTS_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: WEIGHTS_VERSION,
        });
    }
    let stacks = r.u32("stacks")? as usize;
    let tiers = r.u32("tiers")? as usize;
    let scale = f64::from_le_bytes(r.take(8, "scale")?.try_into().unwrap());
    let head = match r.u8("head")? {
        0 => Head::Policy,
        1 => Head::Value,
        _ => return Err(bad("head")),
    };
    let count = r.u32("layer count")?;
    let mut layers = Vec::new();
    for _ in 0..count {
        let kind = match r.u8("layer kind")? {
            0 => LayerKind::SharedTierScale,
            1 => LayerKind::LocallyConnectedPerStack,
            2 => LayerKind::Dense,
            _ => return Err(bad("layer kind")),
        };
        let activation = match r.u8("activation")? {
            0 => Activation::Relu,
            1 => Activation::Linear,
            2 => Activation::Softmax,
            _ => return Err(bad("activation")),
        };
        let spec = LayerSpec {
            kind,
            activation,
            input: r.u32("layer input")? as usize,
            output: r.u32("layer output")? as usize,
            groups: r.u32("layer groups")? as usize,
        };
        let nw = r.u64("weight count")?;
        let nb = r.u64("bias count")?;
        let weights = r.f64s(nw, "weights")?;
        let biases = r.f64s(nb, "biases")?;
        layers.push(Layer {
            spec,
            weights,
            biases,
        });
    }
    if r.pos != buf.len() {
        return Err(bad("trailing data"));
    }
    Network::from_layers(stacks, tiers, scale, head, layers)
}

pub fn save_weights(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_weights(net))?;
    Ok(())
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    decode_weights(&fs::read(path)?).map_err(|e| e.with_path(path))
}

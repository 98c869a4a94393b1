//! Feed-forward networks with exactly the layer kinds the bay encoding
//! needs: tier-shared input scaling, per-stack locally connected layers and
//! dense layers, trained with Adam.

mod adam;
mod io;
mod layer;
mod loss;
mod network;

pub use adam::{backward_and_step, AdamConfig, AdamState};
pub use io::{decode_weights, encode_weights, load_weights, save_weights, WEIGHTS_VERSION};
pub use layer::{softmax, Activation, Layer, LayerGrad, LayerKind, LayerSpec};
pub use loss::{loss_cce, loss_mse, mean_squared_error, one_hot, PROB_FLOOR};
pub use network::{Architecture, Head, Network, Target};

/// Loss and parameter gradients of a single example. Exposed for gradient
/// checking.
pub fn example_gradients(
    network: &Network,
    input: &[f64],
    target: Target,
) -> crate::Result<(f64, Vec<LayerGrad>)> {
    let mut grads = network.zero_grads();
    let mut cache = network::Cache::default();
    let loss = network.accumulate_gradients(input, target, &mut cache, &mut grads)?;
    Ok((loss, grads))
}

//! Adaptive 1D CNN-MLP: configuration, parameter storage and forward pass.
//!
//! Every hidden convolutional neuron convolves (valid, no kernel flip) the
//! pooled outputs of all neurons in the previous layer, adds its bias,
//! applies the activation and mean-pools by its subsampling factor. The last
//! convolutional layer pools over its whole output, so each of its neurons
//! hands a single scalar to the MLP layers whatever the input length.

mod config;
mod model_io;
mod network;
pub mod ops;

pub use config::{Activation, LayerKind, LayerShape, LayerSpec, NetworkConfig, CONV_WIDTH, MLP_WIDTH};
pub use network::{init_parameters, LayerParams, Network, NeuronState, Workspace};
pub use ops::{conv1d_full, conv1d_valid, reverse, subsample, upsample};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Neurons per hidden convolutional layer.
pub const CONV_WIDTH: usize = 8;
/// Neurons per hidden MLP layer.
pub const MLP_WIDTH: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative given the pre-activation `x` and the activation output `y`.
    #[inline]
    pub fn derivative(self, _x: f64, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Tanh => f.write_str("tanh"),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::InvalidConfig(format!("unknown activation {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv1D { kernel_size: usize, subsample: usize },
    Mlp,
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub neurons: usize,
}

impl LayerSpec {
    pub fn conv(neurons: usize, kernel_size: usize, subsample: usize) -> Self {
        LayerSpec {
            kind: LayerKind::Conv1D { kernel_size, subsample },
            neurons,
        }
    }

    pub fn mlp(neurons: usize) -> Self {
        LayerSpec {
            kind: LayerKind::Mlp,
            neurons,
        }
    }

    pub fn output(n_classes: usize) -> Self {
        LayerSpec {
            kind: LayerKind::Output,
            neurons: n_classes,
        }
    }

    pub fn is_conv(&self) -> bool {
        matches!(self.kind, LayerKind::Conv1D { .. })
    }
}

/// Per-layer signal lengths for one input length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    /// Length of each incoming neuron output.
    pub input_len: usize,
    /// Length of `x` and `y`.
    pub conv_len: usize,
    /// Pooling factor actually used (whole output for the last conv layer).
    pub subsample: usize,
    /// Length of `s`.
    pub output_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub layers: Vec<LayerSpec>,
    pub frame_size: usize,
    pub activation: Activation,
    pub seed: u64,
}

impl NetworkConfig {
    /// Builds the layer stack from layer counts: `n_cnn` counts the
    /// input layer plus `n_cnn - 1` hidden convolutional layers of
    /// [`CONV_WIDTH`] neurons; `n_mlp` counts the output layer plus
    /// `n_mlp - 1` hidden MLP layers of [`MLP_WIDTH`] neurons.
    pub fn adaptive(
        n_cnn: usize,
        n_mlp: usize,
        frame_size: usize,
        kernel_size: usize,
        subsample: usize,
        n_classes: usize,
        seed: u64,
    ) -> Result<Self> {
        if n_cnn < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_cnn counts the input layer and must be >= 2, got {n_cnn}"
            )));
        }
        if n_mlp < 1 {
            return Err(Error::InvalidConfig("n_mlp counts the output layer and must be >= 1".into()));
        }
        let mut layers = Vec::with_capacity(n_cnn + n_mlp - 1);
        layers.extend((1..n_cnn).map(|_| LayerSpec::conv(CONV_WIDTH, kernel_size, subsample)));
        layers.extend((1..n_mlp).map(|_| LayerSpec::mlp(MLP_WIDTH)));
        layers.push(LayerSpec::output(n_classes));
        let config = NetworkConfig {
            layers,
            frame_size,
            activation: Activation::Tanh,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let Some(last) = self.layers.last() else {
            return Err(Error::InvalidConfig("no layers".into()));
        };
        if last.kind != LayerKind::Output {
            return Err(Error::InvalidConfig("last layer must be the output layer".into()));
        }
        if self.layers.iter().filter(|l| l.kind == LayerKind::Output).count() != 1 {
            return Err(Error::InvalidConfig("exactly one output layer is allowed".into()));
        }
        if !self.layers[0].is_conv() {
            return Err(Error::InvalidConfig("the first layer must be convolutional".into()));
        }
        let n_conv = self.n_conv_layers();
        if self.layers[n_conv..].iter().any(LayerSpec::is_conv) {
            return Err(Error::InvalidConfig("convolutional layers must precede MLP layers".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.neurons == 0 {
                return Err(Error::InvalidConfig(format!("layer {i} has no neurons")));
            }
            if let LayerKind::Conv1D { kernel_size, subsample } = l.kind {
                if kernel_size == 0 || subsample == 0 {
                    return Err(Error::InvalidConfig(format!(
                        "layer {i}: kernel size and subsampling factor must be >= 1"
                    )));
                }
            }
        }
        if self.n_classes() < 2 {
            return Err(Error::InvalidConfig("output layer needs at least 2 classes".into()));
        }
        self.shape_trace(self.frame_size)?;
        Ok(())
    }

    pub fn n_conv_layers(&self) -> usize {
        self.layers.iter().take_while(|l| l.is_conv()).count()
    }

    pub fn n_classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.neurons)
    }

    /// Number of neurons feeding layer `l` (the input layer has one).
    pub fn fan_in_neurons(&self, l: usize) -> usize {
        if l == 0 {
            1
        } else {
            self.layers[l - 1].neurons
        }
    }

    /// Lengths through the convolutional layers for an input of `input_len`.
    pub fn shape_trace(&self, input_len: usize) -> Result<Vec<LayerShape>> {
        let n_conv = self.n_conv_layers();
        let mut len = input_len;
        let mut shapes = Vec::with_capacity(n_conv);
        for (l, spec) in self.layers[..n_conv].iter().enumerate() {
            let LayerKind::Conv1D { kernel_size, subsample } = spec.kind else {
                unreachable!()
            };
            if len < kernel_size {
                return Err(Error::Shape(format!(
                    "conv layer {l}: kernel {kernel_size} longer than input {len} (frame {input_len})"
                )));
            }
            let conv_len = len - kernel_size + 1;
            let ss = if l + 1 == n_conv { conv_len } else { subsample };
            let output_len = conv_len.div_ceil(ss);
            shapes.push(LayerShape {
                input_len: len,
                conv_len,
                subsample: ss,
                output_len,
            });
            len = output_len;
        }
        Ok(shapes)
    }

    /// Total number of trainable parameters.
    pub fn n_parameters(&self) -> usize {
        self.layers
            .iter()
            .enumerate()
            .map(|(l, spec)| {
                let fan = self.fan_in_neurons(l) * spec.neurons;
                let per = match spec.kind {
                    LayerKind::Conv1D { kernel_size, .. } => kernel_size,
                    _ => 1,
                };
                fan * per + spec.neurons
            })
            .sum()
    }
}

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{LayerKind, LayerShape, NetworkConfig};
use super::ops::conv1d_valid_acc;
use crate::error::{Error, Result};

/// Forward/backward scratch of one neuron.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NeuronState {
    /// Pre-activation.
    pub x: Vec<f64>,
    /// Activation output.
    pub y: Vec<f64>,
    /// Pooled output handed to the next layer.
    pub s: Vec<f64>,
    /// dE/dx.
    pub delta: Vec<f64>,
    /// dE/ds.
    pub delta_s: Vec<f64>,
    /// Activation derivative at `x`.
    pub fprime: Vec<f64>,
}

/// Per-call neuron states for every layer. Index 0 is the input layer; config
/// layer `l` lives at index `l + 1`.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    pub states: Vec<Vec<NeuronState>>,
    pub shapes: Vec<LayerShape>,
    pub(crate) forwarded: bool,
}

impl Workspace {
    pub fn new(config: &NetworkConfig) -> Self {
        let mut states = vec![vec![NeuronState::default()]];
        states.extend(config.layers.iter().map(|l| vec![NeuronState::default(); l.neurons]));
        Workspace {
            states,
            shapes: Vec::new(),
            forwarded: false,
        }
    }

    /// States of config layer `l`.
    pub fn layer(&self, l: usize) -> &[NeuronState] {
        &self.states[l + 1]
    }

    pub fn is_forwarded(&self) -> bool {
        self.forwarded
    }

    /// Output-layer activations of the last forward pass.
    pub fn scores(&self) -> Vec<f64> {
        self.states
            .last()
            .map(|layer| layer.iter().map(|n| n.y[0]).collect())
            .unwrap_or_default()
    }
}

/// Weights and biases of one layer.
///
/// Convolutional kernels from neuron `i` to neuron `k` occupy
/// `weights[(i * n_out + k) * f ..][..f]`; dense weights sit at `i * n_out + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl LayerParams {
    pub fn zeros(n_weights: usize, n_biases: usize) -> Self {
        LayerParams {
            weights: vec![0.0; n_weights],
            biases: vec![0.0; n_biases],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.weights.len(), self.biases.len())
    }

    pub fn len(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(&self.biases)
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.biases.iter_mut())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub config: NetworkConfig,
    pub params: Vec<LayerParams>,
}

/// Glorot-uniform weights, zero biases, reproducible from `seed`.
pub fn init_parameters(config: &NetworkConfig, seed: u64) -> Result<Network> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = Vec::with_capacity(config.layers.len());
    for (l, spec) in config.layers.iter().enumerate() {
        let n_in = config.fan_in_neurons(l);
        let taps = match spec.kind {
            LayerKind::Conv1D { kernel_size, .. } => kernel_size,
            _ => 1,
        };
        let bound = (6.0 / ((n_in + spec.neurons) * taps) as f64).sqrt();
        let weights = (0..n_in * spec.neurons * taps)
            .map(|_| rng.gen_range(-bound..=bound))
            .collect();
        params.push(LayerParams {
            weights,
            biases: vec![0.0; spec.neurons],
        });
    }
    Ok(Network {
        config: config.clone(),
        params,
    })
}

impl Network {
    pub fn init(config: &NetworkConfig) -> Result<Network> {
        init_parameters(config, config.seed)
    }

    /// Wraps externally supplied parameters after checking their counts.
    pub fn from_params(config: NetworkConfig, params: Vec<LayerParams>) -> Result<Network> {
        config.validate()?;
        let template = init_parameters(&config, 0)?;
        if params.len() != template.params.len() {
            return Err(Error::InvalidConfig(format!(
                "expected {} parameter blocks, got {}",
                template.params.len(),
                params.len()
            )));
        }
        for (l, (p, t)) in params.iter().zip(&template.params).enumerate() {
            if p.weights.len() != t.weights.len() || p.biases.len() != t.biases.len() {
                return Err(Error::InvalidConfig(format!("layer {l}: parameter count mismatch")));
            }
            if p.values().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig(format!("layer {l}: non-finite parameter")));
            }
        }
        Ok(Network { config, params })
    }

    pub fn n_classes(&self) -> usize {
        self.config.n_classes()
    }

    pub fn n_parameters(&self) -> usize {
        self.params.iter().map(LayerParams::len).sum()
    }

    /// Kernel connecting neuron `i` of the previous layer to neuron `k` of conv layer `l`.
    pub fn kernel(&self, l: usize, i: usize, k: usize) -> &[f64] {
        let LayerKind::Conv1D { kernel_size, .. } = self.config.layers[l].kind else {
            panic!("layer {l} is not convolutional");
        };
        let n_out = self.config.layers[l].neurons;
        let start = (i * n_out + k) * kernel_size;
        &self.params[l].weights[start..start + kernel_size]
    }

    /// Dense weight from neuron `i` to neuron `k` of MLP/output layer `l`.
    pub fn weight(&self, l: usize, i: usize, k: usize) -> f64 {
        self.params[l].weights[i * self.config.layers[l].neurons + k]
    }

    pub fn workspace(&self) -> Workspace {
        Workspace::new(&self.config)
    }

    /// Runs every layer on `frame` and returns the output activations.
    /// Any frame length that survives the convolutional shape trace is
    /// accepted; the last convolutional layer always pools to one value.
    pub fn forward(&self, frame: &[f64]) -> Result<Vec<f64>> {
        let mut ws = self.workspace();
        self.forward_into(frame, &mut ws)?;
        Ok(ws.scores())
    }

    pub fn forward_into(&self, frame: &[f64], ws: &mut Workspace) -> Result<()> {
        if ws.states.len() != self.config.layers.len() + 1 {
            *ws = self.workspace();
        }
        ws.forwarded = false;
        ws.shapes = self.config.shape_trace(frame.len())?;
        let input = &mut ws.states[0][0];
        input.s.clear();
        input.s.extend_from_slice(frame);
        for (l, spec) in self.config.layers.iter().enumerate() {
            if spec.is_conv() {
                self.forward_conv_layer(l, ws)?;
            } else {
                self.forward_mlp_layer(l, ws)?;
            }
        }
        ws.forwarded = true;
        Ok(())
    }

    /// Index of the predicted class (first maximum).
    pub fn predict(&self, frame: &[f64], ws: &mut Workspace) -> Result<usize> {
        self.forward_into(frame, ws)?;
        Ok(argmax(ws.states.last().expect("output layer").iter().map(|n| n.y[0])))
    }

    /// `x_k = b_k + sum_i conv1d_valid(s_i, w_ik)`, then activation and pooling.
    pub fn forward_conv_layer(&self, l: usize, ws: &mut Workspace) -> Result<()> {
        let LayerKind::Conv1D { kernel_size, .. } = self.config.layers[l].kind else {
            return Err(Error::Shape(format!("layer {l} is not convolutional")));
        };
        let shape = *ws
            .shapes
            .get(l)
            .ok_or_else(|| Error::Shape(format!("no shape for conv layer {l}")))?;
        let act = self.config.activation;
        let (prev, rest) = ws.states.split_at_mut(l + 1);
        let inputs = &prev[l];
        let n_out = self.config.layers[l].neurons;
        if inputs.iter().any(|n| n.s.len() != shape.input_len) {
            return Err(Error::Shape(format!("conv layer {l}: input length mismatch")));
        }
        let params = &self.params[l];
        for (k, neuron) in rest[0].iter_mut().enumerate() {
            neuron.x.clear();
            neuron.x.resize(shape.conv_len, params.biases[k]);
            for (i, src) in inputs.iter().enumerate() {
                let start = (i * n_out + k) * kernel_size;
                conv1d_valid_acc(&src.s, &params.weights[start..start + kernel_size], &mut neuron.x);
            }
            activate(act, neuron);
            neuron.s.clear();
            neuron
                .s
                .extend(neuron.y.chunks(shape.subsample).map(|c| c.iter().sum::<f64>() / c.len() as f64));
            reset_deltas(neuron);
        }
        Ok(())
    }

    /// `x_k = b_k + sum_i w_ik s_i` for scalar-output layers.
    pub fn forward_mlp_layer(&self, l: usize, ws: &mut Workspace) -> Result<()> {
        if self.config.layers[l].is_conv() {
            return Err(Error::Shape(format!("layer {l} is convolutional")));
        }
        let act = self.config.activation;
        let (prev, rest) = ws.states.split_at_mut(l + 1);
        let inputs = &prev[l];
        if inputs.iter().any(|n| n.s.len() != 1) {
            return Err(Error::Shape(format!("dense layer {l}: inputs must be scalars")));
        }
        let n_out = self.config.layers[l].neurons;
        let params = &self.params[l];
        for (k, neuron) in rest[0].iter_mut().enumerate() {
            let mut x = params.biases[k];
            for (i, src) in inputs.iter().enumerate() {
                x += params.weights[i * n_out + k] * src.s[0];
            }
            neuron.x.clear();
            neuron.x.push(x);
            activate(act, neuron);
            neuron.s.clear();
            neuron.s.push(neuron.y[0]);
            reset_deltas(neuron);
        }
        Ok(())
    }
}

fn activate(act: super::Activation, neuron: &mut NeuronState) {
    neuron.y.clear();
    neuron.y.extend(neuron.x.iter().map(|&x| act.apply(x)));
    neuron.fprime.clear();
    neuron
        .fprime
        .extend(neuron.x.iter().zip(&neuron.y).map(|(&x, &y)| act.derivative(x, y)));
}

fn reset_deltas(neuron: &mut NeuronState) {
    neuron.delta.clear();
    neuron.delta.resize(neuron.x.len(), 0.0);
    neuron.delta_s.clear();
    neuron.delta_s.resize(neuron.s.len(), 0.0);
}

pub(crate) fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::{conv1d_valid, subsample, Activation, LayerSpec};
    use proptest::{prop_assert, proptest};

    fn toy_config() -> NetworkConfig {
        NetworkConfig {
            layers: vec![
                LayerSpec::conv(2, 3, 2),
                LayerSpec::conv(3, 3, 2),
                LayerSpec::mlp(4),
                LayerSpec::mlp(3),
                LayerSpec::output(2),
            ],
            frame_size: 24,
            activation: Activation::Tanh,
            seed: 11,
        }
    }

    /// Single-procedure reference forward pass written directly from the
    /// layer equations, with its own index arithmetic.
    fn monolithic_forward(net: &Network, frame: &[f64]) -> Vec<f64> {
        let cfg = &net.config;
        let n_conv = cfg.n_conv_layers();
        let mut outs: Vec<Vec<f64>> = vec![frame.to_vec()];
        for l in 0..n_conv {
            let LayerKind::Conv1D { kernel_size: f, subsample: ss } = cfg.layers[l].kind else { unreachable!() };
            let n_out = cfg.layers[l].neurons;
            let mut next = Vec::new();
            for k in 0..n_out {
                let len = outs[0].len() - f + 1;
                let mut y = Vec::new();
                for n in 0..len {
                    let mut x = net.params[l].biases[k];
                    for (i, s) in outs.iter().enumerate() {
                        for m in 0..f {
                            x += s[n + m] * net.params[l].weights[(i * n_out + k) * f + m];
                        }
                    }
                    y.push(x.tanh());
                }
                let pool = if l + 1 == n_conv { y.len() } else { ss };
                let mut pooled = Vec::new();
                let mut j = 0;
                while j < y.len() {
                    let end = (j + pool).min(y.len());
                    pooled.push(y[j..end].iter().sum::<f64>() / (end - j) as f64);
                    j = end;
                }
                next.push(pooled);
            }
            outs = next;
        }
        let mut v: Vec<f64> = outs.iter().map(|s| s[0]).collect();
        for l in n_conv..cfg.layers.len() {
            let n_out = cfg.layers[l].neurons;
            v = (0..n_out)
                .map(|k| {
                    let mut x = net.params[l].biases[k];
                    for (i, s) in v.iter().enumerate() {
                        x += net.params[l].weights[i * n_out + k] * s;
                    }
                    x.tanh()
                })
                .collect();
        }
        v
    }

    fn randomize(net: &mut Network, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in &mut net.params {
            for v in p.values_mut() {
                *v = rng.gen_range(-0.8..0.8);
            }
        }
    }

    #[test]
    fn same_seed_same_parameters() {
        let cfg = toy_config();
        let a = init_parameters(&cfg, 5).unwrap();
        let b = init_parameters(&cfg, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, init_parameters(&cfg, 6).unwrap());
        assert_eq!(a.n_parameters(), cfg.n_parameters());
    }

    #[test]
    fn glorot_bounds_and_zero_biases() {
        let cfg = toy_config();
        let net = Network::init(&cfg).unwrap();
        for (l, spec) in cfg.layers.iter().enumerate() {
            let taps = match spec.kind {
                LayerKind::Conv1D { kernel_size, .. } => kernel_size,
                _ => 1,
            };
            let bound = (6.0 / ((cfg.fan_in_neurons(l) + spec.neurons) * taps) as f64).sqrt();
            assert!(net.params[l].weights.iter().all(|w| w.abs() <= bound));
            assert!(net.params[l].biases.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn init_draws_are_centred() {
        // one wide dense layer gives 10^4 draws from U(-b, b)
        let cfg = NetworkConfig {
            layers: vec![LayerSpec::conv(100, 1, 1), LayerSpec::output(100)],
            frame_size: 4,
            activation: Activation::Tanh,
            seed: 3,
        };
        let net = Network::init(&cfg).unwrap();
        let w = &net.params[1].weights;
        assert_eq!(w.len(), 10_000);
        let bound = (6.0f64 / 200.0).sqrt();
        let sigma = bound / 3f64.sqrt() / (w.len() as f64).sqrt();
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        assert!(mean.abs() < 3.0 * sigma, "mean {mean} sigma {sigma}");
    }

    #[test]
    fn zero_input_isolates_bias() {
        let cfg = NetworkConfig {
            layers: vec![LayerSpec::conv(1, 3, 2), LayerSpec::output(2)],
            frame_size: 4,
            activation: Activation::Tanh,
            seed: 0,
        };
        let mut net = Network::init(&cfg).unwrap();
        net.params[0].biases[0] = 0.5;
        let mut ws = net.workspace();
        net.forward_into(&[0.0; 4], &mut ws).unwrap();
        let n = &ws.layer(0)[0];
        assert_eq!(n.x, vec![0.5, 0.5]);
        assert!(n.y.iter().all(|&y| y == 0.5f64.tanh()));
        assert_eq!(n.s.len(), 1);
    }

    #[test]
    fn last_conv_layer_pools_to_scalar() {
        let cfg = NetworkConfig {
            layers: vec![LayerSpec::conv(2, 4, 2), LayerSpec::output(2)],
            frame_size: 10,
            activation: Activation::Tanh,
            seed: 0,
        };
        let net = Network::init(&cfg).unwrap();
        let mut ws = net.workspace();
        net.forward_into(&[0.1; 10], &mut ws).unwrap();
        assert_eq!(ws.layer(0)[0].y.len(), 7);
        assert!(ws.layer(0).iter().all(|n| n.s.len() == 1));
    }

    #[test]
    fn conv_layer_matches_unrolled_neurons() {
        let cfg = toy_config();
        let mut net = Network::init(&cfg).unwrap();
        randomize(&mut net, 99);
        let frame: Vec<f64> = (0..24).map(|i| (i as f64 * 0.7).cos()).collect();
        let mut ws = net.workspace();
        net.forward_into(&frame, &mut ws).unwrap();
        for k in 0..2 {
            let mut x = conv1d_valid(&frame, net.kernel(0, 0, k)).unwrap();
            x.iter_mut().for_each(|v| *v += net.params[0].biases[k]);
            let y: Vec<f64> = x.iter().map(|v| v.tanh()).collect();
            let s = subsample(&y, 2).unwrap();
            let n = &ws.layer(0)[k];
            for (a, b) in n.x.iter().zip(&x) {
                assert!((a - b).abs() < 1e-12);
            }
            for (a, b) in n.s.iter().zip(&s) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mlp_layer_examples() {
        let cfg = NetworkConfig {
            layers: vec![LayerSpec::conv(1, 1, 1), LayerSpec::output(2)],
            frame_size: 1,
            activation: Activation::Tanh,
            seed: 0,
        };
        let mut net = Network::init(&cfg).unwrap();
        net.params[1].weights = vec![1.0, 0.0];
        net.params[1].biases = vec![0.0, 0.3];
        let mut ws = net.workspace();
        ws.states[1][0].s = vec![1.0];
        net.forward_mlp_layer(1, &mut ws).unwrap();
        // single connection, then bias isolation through a zero weight
        assert_eq!(ws.layer(1)[0].y, vec![1.0f64.tanh()]);
        assert_eq!(ws.layer(1)[1].y, vec![0.3f64.tanh()]);
        ws.states[1][0].s = vec![1.0, 2.0];
        assert!(net.forward_mlp_layer(1, &mut ws).is_err());
    }

    #[test]
    fn forward_shape_and_determinism() {
        let net = Network::init(&toy_config()).unwrap();
        let frame: Vec<f64> = (0..24).map(|i| (i as f64).sin()).collect();
        let a = net.forward(&frame).unwrap();
        let b = net.forward(&frame).unwrap();
        assert_eq!(a.len(), 2);
        assert!(a.iter().all(|v| v.is_finite()));
        assert_eq!(a, b);
        assert!(net.forward(&frame[..5]).is_err());
    }

    proptest! {
        #[test]
        fn forward_matches_monolithic_reference(seed in 0u64..1000, len in 24usize..60) {
            let mut net = Network::init(&toy_config()).unwrap();
            randomize(&mut net, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
            let frame: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fast = net.forward(&frame).unwrap();
            let slow = monolithic_forward(&net, &frame);
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }

        #[test]
        fn dense_layer_matches_matrix_vector(seed in 0u64..1000) {
            let mut net = Network::init(&toy_config()).unwrap();
            randomize(&mut net, seed);
            let frame = vec![0.25; 24];
            let mut ws = net.workspace();
            net.forward_into(&frame, &mut ws).unwrap();
            // layer 2: 3 inputs -> 4 outputs
            let input: Vec<f64> = ws.layer(1).iter().map(|n| n.s[0]).collect();
            for k in 0..4 {
                let x: f64 = net.params[2].biases[k]
                    + (0..3).map(|i| net.weight(2, i, k) * input[i]).sum::<f64>();
                prop_assert!((ws.layer(2)[k].x[0] - x).abs() < 1e-12);
            }
        }

        #[test]
        fn stored_fprime_matches_finite_difference(seed in 0u64..200) {
            let mut net = Network::init(&toy_config()).unwrap();
            randomize(&mut net, seed);
            let frame: Vec<f64> = (0..24).map(|i| ((i as u64 * 7 + seed) % 13) as f64 / 6.5 - 1.0).collect();
            let mut ws = net.workspace();
            net.forward_into(&frame, &mut ws).unwrap();
            let h = 1e-5;
            for layer in &ws.states[1..] {
                for n in layer {
                    for (x, fp) in n.x.iter().zip(&n.fprime) {
                        let fd = ((x + h).tanh() - (x - h).tanh()) / (2.0 * h);
                        prop_assert!((fd - fp).abs() < 1e-6);
                    }
                }
            }
        }
    }
}

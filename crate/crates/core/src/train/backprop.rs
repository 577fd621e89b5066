use crate::cnn::ops::{conv1d_full_acc, conv1d_valid_acc};
use crate::cnn::{reverse, upsample, LayerKind, LayerParams, Network, Workspace};
use crate::error::{Error, Result};

/// Parameter-shaped accumulator for dE/dw and dE/db.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerParams>,
}

impl Gradients {
    pub fn zeros_like(network: &Network) -> Self {
        Gradients {
            layers: network.params.iter().map(LayerParams::zeros_like).collect(),
        }
    }

    pub fn clear(&mut self) {
        for l in &mut self.layers {
            l.values_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(LayerParams::values)
    }
}

/// `+1` for the true class, `-1` elsewhere.
pub fn one_hot_target(class: usize, n_classes: usize) -> Vec<f64> {
    (0..n_classes).map(|c| if c == class { 1.0 } else { -1.0 }).collect()
}

/// Per-frame loss `E = 1/2 * sum_c (y_c - t_c)^2`; its gradient is what
/// [`backward`] propagates.
pub fn frame_loss(scores: &[f64], target: &[f64]) -> f64 {
    0.5 * scores.iter().zip(target).map(|(y, t)| (y - t) * (y - t)).sum::<f64>()
}

/// Propagates the output residual back through every layer, filling `delta`
/// and `delta_s` of each neuron in `ws`.
///
/// Dense layers: `ds_k = sum_i d_i w_ki`. Convolutional layers feeding a
/// convolutional layer: `ds_k = sum_i conv1d_full(d_i, rev(w_ki))`. A
/// convolutional neuron's `delta` is its pooled delta spread back over each
/// pooling block (divided by the block length) times `F'(x)`.
pub fn backward(network: &Network, ws: &mut Workspace, target: &[f64]) -> Result<()> {
    if !ws.is_forwarded() {
        return Err(Error::InvalidArgument("backward called before forward".into()));
    }
    let layers = &network.config.layers;
    let n_layers = layers.len();
    if target.len() != network.n_classes() {
        return Err(Error::Shape(format!(
            "target has {} entries, network has {} outputs",
            target.len(),
            network.n_classes()
        )));
    }

    for (neuron, &t) in ws.states[n_layers].iter_mut().zip(target) {
        neuron.delta_s[0] = neuron.y[0] - t;
        neuron.delta[0] = neuron.delta_s[0] * neuron.fprime[0];
    }

    for l in (0..n_layers - 1).rev() {
        let next = l + 1;
        let n_next = layers[next].neurons;
        let (lower, upper) = ws.states.split_at_mut(next + 1);
        let current = &mut lower[next];
        let downstream = &upper[0];
        match layers[next].kind {
            LayerKind::Conv1D { kernel_size, .. } => {
                for (k, neuron) in current.iter_mut().enumerate() {
                    neuron.delta_s.iter_mut().for_each(|v| *v = 0.0);
                    for (i, d) in downstream.iter().enumerate() {
                        let start = (k * n_next + i) * kernel_size;
                        let rev = reverse(&network.params[next].weights[start..start + kernel_size]);
                        conv1d_full_acc(&d.delta, &rev, &mut neuron.delta_s);
                    }
                }
            }
            LayerKind::Mlp | LayerKind::Output => {
                for (k, neuron) in current.iter_mut().enumerate() {
                    if neuron.delta_s.len() != 1 {
                        return Err(Error::Shape(format!("layer {l} feeds a dense layer with a vector output")));
                    }
                    neuron.delta_s[0] = downstream
                        .iter()
                        .enumerate()
                        .map(|(i, d)| d.delta[0] * network.params[next].weights[k * n_next + i])
                        .sum();
                }
            }
        }
        match layers[l].kind {
            LayerKind::Conv1D { .. } => {
                let ss = ws.shapes[l].subsample;
                for neuron in lower[next].iter_mut() {
                    let up = upsample(&neuron.delta_s, ss, neuron.x.len());
                    for ((d, u), fp) in neuron.delta.iter_mut().zip(up).zip(&neuron.fprime) {
                        *d = u * fp;
                    }
                }
            }
            LayerKind::Mlp | LayerKind::Output => {
                for neuron in lower[next].iter_mut() {
                    neuron.delta[0] = neuron.delta_s[0] * neuron.fprime[0];
                }
            }
        }
    }
    Ok(())
}

/// Adds this frame's weight and bias sensitivities to `grads`:
/// kernel gradient `conv1d_valid(s_i, d_k)`, dense weight gradient `s_i d_k`,
/// bias gradient `sum_n d_k(n)`.
pub fn weight_bias_sensitivities(network: &Network, ws: &Workspace, grads: &mut Gradients) -> Result<()> {
    if grads.layers.len() != network.params.len() {
        return Err(Error::Shape("gradient store does not match the network".into()));
    }
    for (l, spec) in network.config.layers.iter().enumerate() {
        let inputs = &ws.states[l];
        let outputs = &ws.states[l + 1];
        let n_out = spec.neurons;
        let g = &mut grads.layers[l];
        match spec.kind {
            LayerKind::Conv1D { kernel_size, .. } => {
                for (k, out) in outputs.iter().enumerate() {
                    for (i, inp) in inputs.iter().enumerate() {
                        if inp.s.len() + 1 != out.delta.len() + kernel_size {
                            return Err(Error::Shape(format!("layer {l}: delta/input length mismatch")));
                        }
                        let start = (i * n_out + k) * kernel_size;
                        conv1d_valid_acc(&inp.s, &out.delta, &mut g.weights[start..start + kernel_size]);
                    }
                    g.biases[k] += out.delta.iter().sum::<f64>();
                }
            }
            LayerKind::Mlp | LayerKind::Output => {
                for (k, out) in outputs.iter().enumerate() {
                    for (i, inp) in inputs.iter().enumerate() {
                        g.weights[i * n_out + k] += inp.s[0] * out.delta[0];
                    }
                    g.biases[k] += out.delta[0];
                }
            }
        }
    }
    Ok(())
}

/// Forward, backward and sensitivities for one frame; accumulates into
/// `grads` and returns the frame loss.
pub fn compute_gradients(
    network: &Network,
    frame: &[f64],
    target: &[f64],
    ws: &mut Workspace,
    grads: &mut Gradients,
) -> Result<f64> {
    network.forward_into(frame, ws)?;
    let loss = frame_loss(&ws.scores(), target);
    backward(network, ws, target)?;
    weight_bias_sensitivities(network, ws, grads)?;
    Ok(loss)
}

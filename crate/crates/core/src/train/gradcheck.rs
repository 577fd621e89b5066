use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{compute_gradients, frame_loss, one_hot_target, Gradients};
use crate::cnn::{Activation, LayerSpec, Network, NetworkConfig, CONV_WIDTH, MLP_WIDTH};
use crate::error::{Error, Result};

const STEP: f64 = 1e-5;
const DENOM_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamLocation {
    pub layer: usize,
    pub is_bias: bool,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub n_params: usize,
    pub max_rel_error: f64,
    pub worst: Option<ParamLocation>,
    pub tolerance: f64,
    pub passed: bool,
}

impl GradcheckReport {
    pub fn summary(&self) -> String {
        let worst = self.worst.map_or("-".to_string(), |w| {
            format!("layer {} {} {}", w.layer, if w.is_bias { "bias" } else { "weight" }, w.index)
        });
        format!(
            "{} params={} max_rel_error={:.3e} tolerance={:e} worst=[{}]",
            if self.passed { "PASS" } else { "FAIL" },
            self.n_params,
            self.max_rel_error,
            self.tolerance,
            worst
        )
    }
}

/// Toy network used by the gradient check: `n_conv` hidden conv layers
/// (kernel 5, pooling 2), `n_mlp` hidden MLP layers, 2 outputs, frames of 32.
pub fn toy_config(n_conv: usize, n_mlp: usize, seed: u64) -> NetworkConfig {
    let mut layers = vec![LayerSpec::conv(CONV_WIDTH, 5, 2); n_conv];
    layers.extend(vec![LayerSpec::mlp(MLP_WIDTH); n_mlp]);
    layers.push(LayerSpec::output(2));
    NetworkConfig {
        layers,
        frame_size: 32,
        activation: Activation::Tanh,
        seed,
    }
}

pub fn analytic_gradients(network: &Network, frame: &[f64], target: &[f64]) -> Result<Gradients> {
    let mut ws = network.workspace();
    let mut grads = Gradients::zeros_like(network);
    compute_gradients(network, frame, target, &mut ws, &mut grads)?;
    Ok(grads)
}

/// Central differences of the frame loss with respect to every parameter.
pub fn numeric_gradients(network: &Network, frame: &[f64], target: &[f64]) -> Result<Gradients> {
    let mut probe = network.clone();
    let mut ws = probe.workspace();
    let mut grads = Gradients::zeros_like(network);
    for l in 0..probe.params.len() {
        for is_bias in [false, true] {
            let n = if is_bias { probe.params[l].biases.len() } else { probe.params[l].weights.len() };
            for idx in 0..n {
                let orig = *param_mut(&mut probe, l, is_bias, idx);
                *param_mut(&mut probe, l, is_bias, idx) = orig + STEP;
                probe.forward_into(frame, &mut ws)?;
                let up = frame_loss(&ws.scores(), target);
                *param_mut(&mut probe, l, is_bias, idx) = orig - STEP;
                probe.forward_into(frame, &mut ws)?;
                let down = frame_loss(&ws.scores(), target);
                *param_mut(&mut probe, l, is_bias, idx) = orig;
                let g = (up - down) / (2.0 * STEP);
                if is_bias {
                    grads.layers[l].biases[idx] = g;
                } else {
                    grads.layers[l].weights[idx] = g;
                }
            }
        }
    }
    Ok(grads)
}

fn param_mut(net: &mut Network, layer: usize, is_bias: bool, idx: usize) -> &mut f64 {
    if is_bias {
        &mut net.params[layer].biases[idx]
    } else {
        &mut net.params[layer].weights[idx]
    }
}

/// Compares `analytic` against central differences, entry by entry, using
/// `|ga - gn| / max(|ga|, |gn|, 1e-8)`.
pub fn compare_gradients(
    network: &Network,
    frame: &[f64],
    target: &[f64],
    analytic: &Gradients,
    tolerance: f64,
) -> Result<GradcheckReport> {
    if analytic.layers.len() != network.params.len() {
        return Err(Error::Shape("gradient store does not match the network".into()));
    }
    let numeric = numeric_gradients(network, frame, target)?;
    let mut max_rel_error = 0.0f64;
    let mut worst = None;
    for (l, (a, n)) in analytic.layers.iter().zip(&numeric.layers).enumerate() {
        let blocks = [(false, &a.weights, &n.weights), (true, &a.biases, &n.biases)];
        for (is_bias, av, nv) in blocks {
            for (index, (&ga, &gn)) in av.iter().zip(nv.iter()).enumerate() {
                let rel = (ga - gn).abs() / ga.abs().max(gn.abs()).max(DENOM_FLOOR);
                if rel > max_rel_error || rel.is_nan() {
                    max_rel_error = if rel.is_nan() { f64::INFINITY } else { rel };
                    worst = Some(ParamLocation { layer: l, is_bias, index });
                }
            }
        }
    }
    Ok(GradcheckReport {
        n_params: network.n_parameters(),
        max_rel_error,
        worst,
        tolerance,
        passed: max_rel_error < tolerance,
    })
}

/// Initializes `config` from `seed`, draws a random frame, biases and target
/// class from the same seed and checks every parameter's gradient.
pub fn gradcheck(config: &NetworkConfig, seed: u64, tolerance: f64) -> Result<GradcheckReport> {
    let mut network = crate::cnn::init_parameters(config, seed)?;
    if network.n_parameters() >= 10_000 {
        return Err(Error::InvalidConfig(format!(
            "{} parameters is too many for a finite-difference check",
            network.n_parameters()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    for p in &mut network.params {
        p.biases.iter_mut().for_each(|b| *b = rng.gen_range(-0.2..0.2));
    }
    let frame: Vec<f64> = (0..config.frame_size).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let target = one_hot_target(rng.gen_range(0..config.n_classes()), config.n_classes());
    let analytic = analytic_gradients(&network, &frame, &target)?;
    compare_gradients(&network, &frame, &target, &analytic, tolerance)
}

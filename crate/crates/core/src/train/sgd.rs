use super::Gradients;
use crate::cnn::{LayerParams, Network};
use crate::error::{Error, Result};

/// Sample-wise SGD with classical momentum: `v <- m v - lr g`, `p <- p + v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sgd {
    pub learning_rate: f64,
    pub momentum: f64,
    velocity: Vec<LayerParams>,
}

impl Sgd {
    pub fn new(network: &Network, learning_rate: f64, momentum: f64) -> Self {
        Sgd {
            learning_rate,
            momentum,
            velocity: network.params.iter().map(LayerParams::zeros_like).collect(),
        }
    }

    pub fn velocity(&self) -> &[LayerParams] {
        &self.velocity
    }

    pub fn step(&mut self, network: &mut Network, grads: &Gradients) -> Result<()> {
        if grads.layers.len() != network.params.len() {
            return Err(Error::Shape("gradient store does not match the network".into()));
        }
        let mut flat = 0;
        for ((p, g), v) in network.params.iter_mut().zip(&grads.layers).zip(&mut self.velocity) {
            if p.weights.len() != g.weights.len() || p.biases.len() != g.biases.len() {
                return Err(Error::Shape("gradient shape mismatch".into()));
            }
            for ((pv, gv), vv) in p.values_mut().zip(g.values()).zip(v.values_mut()) {
                *vv = self.momentum * *vv - self.learning_rate * gv;
                *pv += *vv;
                if !pv.is_finite() {
                    return Err(Error::NonFinite { index: flat });
                }
                flat += 1;
            }
        }
        Ok(())
    }
}

/// One update of `network` with `grads` using the optimizer state in `sgd`.
pub fn sgd_step(network: &mut Network, grads: &Gradients, sgd: &mut Sgd) -> Result<()> {
    sgd.step(network, grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::NetworkConfig;

    fn net() -> Network {
        Network::init(&NetworkConfig::adaptive(2, 2, 16, 3, 2, 2, 1).unwrap()).unwrap()
    }

    fn grads_from(net: &Network, f: impl Fn(f64) -> f64) -> Gradients {
        Gradients {
            layers: net
                .params
                .iter()
                .map(|p| LayerParams {
                    weights: p.weights.iter().map(|&v| f(v)).collect(),
                    biases: p.biases.iter().map(|&v| f(v)).collect(),
                })
                .collect(),
        }
    }

    #[test]
    fn full_step_reaches_zero() {
        let mut n = net();
        let g = grads_from(&n, |v| v);
        let mut sgd = Sgd::new(&n, 1.0, 0.0);
        sgd_step(&mut n, &g, &mut sgd).unwrap();
        assert!(n.params.iter().flat_map(|p| p.values()).all(|&v| v == 0.0));
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut n = net();
        let before = n.clone();
        let g = Gradients::zeros_like(&n);
        let mut sgd = Sgd::new(&n, 0.5, 0.9);
        for _ in 0..3 {
            sgd.step(&mut n, &g).unwrap();
        }
        assert_eq!(n, before);
    }

    #[test]
    fn two_momentum_steps_by_hand() {
        let mut n = net();
        let p0 = n.params[0].weights[0];
        let g = grads_from(&n, |_| 0.5);
        let (lr, m) = (0.1, 0.9);
        let mut sgd = Sgd::new(&n, lr, m);
        sgd.step(&mut n, &g).unwrap();
        sgd.step(&mut n, &g).unwrap();
        let v1 = -lr * 0.5;
        let v2 = m * v1 - lr * 0.5;
        assert!((n.params[0].weights[0] - (p0 + v1 + v2)).abs() < 1e-15);
        assert!((sgd.velocity()[0].weights[0] - v2).abs() < 1e-15);
    }

    #[test]
    fn non_finite_update_rejected() {
        let mut n = net();
        let g = grads_from(&n, |_| f64::INFINITY);
        let mut sgd = Sgd::new(&n, 0.1, 0.0);
        assert!(matches!(sgd.step(&mut n, &g), Err(Error::NonFinite { index: 0 })));
    }
}

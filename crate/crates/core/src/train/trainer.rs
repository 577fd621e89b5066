use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{backward, one_hot_target, weight_bias_sensitivities, Gradients, Sgd};
use crate::cnn::Network;
use crate::dataset::Split;
use crate::error::{Error, Result};
use crate::metrics::{evaluate_with_loss, ConfusionMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Epoch cap; one BP iteration is one pass over the training frames.
    pub max_iterations: usize,
    /// Stop once the training classification error is at or below this.
    pub min_train_error: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub shuffle_seed: u64,
    /// Undersample every class to the minority count before training.
    pub balance_classes: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_iterations: 200,
            min_train_error: 0.01,
            learning_rate: 0.01,
            momentum: 0.9,
            shuffle_seed: 0,
            balance_classes: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::InvalidArgument("max_iterations must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.min_train_error) {
            return Err(Error::InvalidArgument("min_train_error must lie in [0, 1)".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::InvalidArgument("learning_rate must be finite and >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument("momentum must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Mean squared error per output and fraction misclassified over a frame set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub mse: f64,
    pub classification_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: LossValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIterations,
    ErrorFloor,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::MaxIterations => "max_iterations",
            StopReason::ErrorFloor => "error_floor",
        })
    }
}

impl FromStr for StopReason {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max_iterations" => Ok(StopReason::MaxIterations),
            "error_floor" => Ok(StopReason::ErrorFloor),
            _ => Err(Error::InvalidArgument(format!("unknown stop reason {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub stop_reason: StopReason,
    pub train_confusion: ConfusionMatrix,
    pub test_confusion: ConfusionMatrix,
}

impl TrainReport {
    pub fn train_accuracy(&self) -> f64 {
        self.train_confusion.accuracy()
    }

    pub fn test_accuracy(&self) -> f64 {
        self.test_confusion.accuracy()
    }

    /// Tab-separated `epoch E train_err` rows, then a `#`-prefixed summary block.
    pub fn to_text(&self) -> String {
        let mut out = String::from("epoch\tE\ttrain_err\n");
        for e in &self.epochs {
            let _ = writeln!(out, "{}\t{:e}\t{:e}", e.epoch, e.loss.mse, e.loss.classification_error);
        }
        let _ = writeln!(out, "# stop_reason={}", self.stop_reason);
        let _ = writeln!(out, "# epochs={}", self.epochs.len());
        let _ = writeln!(out, "# train_frames={}", self.train_confusion.total());
        let _ = writeln!(out, "# test_frames={}", self.test_confusion.total());
        let _ = writeln!(out, "# train_accuracy={}", self.train_accuracy());
        let _ = writeln!(out, "# test_accuracy={}", self.test_accuracy());
        let _ = writeln!(out, "# train_confusion={}", self.train_confusion.to_compact());
        let _ = writeln!(out, "# test_confusion={}", self.test_confusion.to_compact());
        out
    }

    pub fn from_text(text: &str) -> Result<TrainReport> {
        let bad = |what: &str| Error::InvalidArgument(format!("train report: bad {what}"));
        let mut epochs = Vec::new();
        let mut stop = None;
        let mut train_cm = None;
        let mut test_cm = None;
        for line in text.lines().skip(1) {
            if let Some(kv) = line.strip_prefix("# ") {
                let (k, v) = kv.split_once('=').ok_or_else(|| bad("summary line"))?;
                match k {
                    "stop_reason" => stop = Some(v.parse()?),
                    "train_confusion" => train_cm = Some(ConfusionMatrix::from_compact(v)?),
                    "test_confusion" => test_cm = Some(ConfusionMatrix::from_compact(v)?),
                    _ => {}
                }
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [epoch, mse, err] = cols[..] else {
                return Err(bad("epoch row"));
            };
            epochs.push(EpochRecord {
                epoch: epoch.parse().map_err(|_| bad("epoch"))?,
                loss: LossValue {
                    mse: mse.parse().map_err(|_| bad("E"))?,
                    classification_error: err.parse().map_err(|_| bad("train_err"))?,
                },
            });
        }
        Ok(TrainReport {
            epochs,
            stop_reason: stop.ok_or_else(|| bad("stop_reason"))?,
            train_confusion: train_cm.ok_or_else(|| bad("train_confusion"))?,
            test_confusion: test_cm.ok_or_else(|| bad("test_confusion"))?,
        })
    }
}

/// Sample-wise SGD over the training frames, reshuffled every epoch from
/// `shuffle_seed`. After each epoch the whole training set is re-scored;
/// training stops at the error floor or the epoch cap, the floor taking
/// precedence when both hold.
pub fn train(network: &mut Network, split: &Split, config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    let n_classes = network.n_classes();
    if split.train.n_classes() != n_classes {
        return Err(Error::InvalidArgument(format!(
            "network has {n_classes} outputs but the data has {} classes",
            split.train.n_classes()
        )));
    }
    let train_set = if config.balance_classes {
        split.train.undersample(config.shuffle_seed)
    } else {
        split.train.clone()
    };
    train_set.ensure_all_classes()?;

    let targets: Vec<Vec<f64>> = (0..n_classes).map(|c| one_hot_target(c, n_classes)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.shuffle_seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut sgd = Sgd::new(network, config.learning_rate, config.momentum);
    let mut grads = Gradients::zeros_like(network);
    let mut ws = network.workspace();
    let mut epochs = Vec::new();
    let mut stop_reason = StopReason::MaxIterations;

    for epoch in 1..=config.max_iterations {
        order.shuffle(&mut rng);
        for &i in &order {
            let frame = &train_set.frames[i];
            network.forward_into(&frame.samples, &mut ws)?;
            backward(network, &mut ws, &targets[frame.class])?;
            grads.clear();
            weight_bias_sensitivities(network, &ws, &mut grads)?;
            sgd.step(network, &grads).map_err(|e| match e {
                Error::NonFinite { .. } => Error::Diverged { epoch },
                other => other,
            })?;
        }
        let (cm, mse) = evaluate_with_loss(network, &train_set)?;
        if !mse.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        let loss = LossValue {
            mse,
            classification_error: 1.0 - cm.accuracy(),
        };
        epochs.push(EpochRecord { epoch, loss });
        if loss.classification_error <= config.min_train_error {
            stop_reason = StopReason::ErrorFloor;
            break;
        }
    }

    let (train_confusion, _) = evaluate_with_loss(network, &train_set)?;
    let test_confusion = if split.test.is_empty() {
        ConfusionMatrix::new(n_classes)
    } else {
        evaluate_with_loss(network, &split.test)?.0
    };
    Ok(TrainReport {
        epochs,
        stop_reason,
        train_confusion,
        test_confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::NetworkConfig;
    use crate::dataset::{ClassMap, ClassMode, Frame, FrameSet};

    fn constant_split(per_class: usize) -> Split {
        let map = ClassMap::new(ClassMode::TwoClass);
        let mk = |n: usize| {
            let frames = (0..n)
                .map(|i| Frame {
                    samples: vec![if i % 2 == 0 { 0.5 } else { -0.5 }; 16],
                    class: i % 2,
                    subject_id: 2,
                    start_index: i * 16,
                })
                .collect();
            FrameSet {
                frames,
                class_map: map,
                frame_size: 16,
                hop: 16,
                signal_too_short: false,
            }
        };
        Split {
            train: mk(2 * per_class),
            test: mk(per_class),
        }
    }

    fn small_net(seed: u64) -> Network {
        Network::init(&NetworkConfig::adaptive(2, 2, 16, 3, 2, 2, seed).unwrap()).unwrap()
    }

    #[test]
    fn separable_constants_hit_error_floor() {
        let split = constant_split(10);
        let mut net = small_net(1);
        let report = train(&mut net, &split, &TrainConfig::default()).unwrap();
        assert_eq!(report.stop_reason, StopReason::ErrorFloor);
        assert!(report.epochs.len() < 200);
        assert_eq!(report.test_accuracy(), 1.0);
    }

    #[test]
    fn epoch_cap_of_one() {
        let split = constant_split(10);
        let mut net = small_net(1);
        let cfg = TrainConfig {
            max_iterations: 1,
            min_train_error: 0.0,
            learning_rate: 1e-6,
            ..TrainConfig::default()
        };
        let report = train(&mut net, &split, &cfg).unwrap();
        assert_eq!(report.epochs.len(), 1);
        assert_eq!(report.epochs[0].epoch, 1);
    }

    #[test]
    fn floor_wins_when_both_rules_fire() {
        let split = constant_split(10);
        let mut net = small_net(1);
        let cfg = TrainConfig {
            max_iterations: 1,
            min_train_error: 0.99,
            ..TrainConfig::default()
        };
        let report = train(&mut net, &split, &cfg).unwrap();
        assert_eq!(report.epochs.len(), 1);
        assert_eq!(report.stop_reason, StopReason::ErrorFloor);
    }

    #[test]
    fn same_seed_same_report() {
        let split = constant_split(8);
        let cfg = TrainConfig {
            max_iterations: 5,
            min_train_error: 0.0,
            shuffle_seed: 3,
            ..TrainConfig::default()
        };
        let mut a = small_net(2);
        let mut b = small_net(2);
        let ra = train(&mut a, &split, &cfg).unwrap();
        let rb = train(&mut b, &split, &cfg).unwrap();
        assert_eq!(ra.to_text(), rb.to_text());
        assert_eq!(a, b);
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_bit_identical() {
        let split = constant_split(6);
        let mut net = small_net(4);
        let before = net.clone();
        let cfg = TrainConfig {
            max_iterations: 4,
            min_train_error: 0.0,
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        train(&mut net, &split, &cfg).unwrap();
        for (a, b) in net.params.iter().zip(&before.params) {
            assert!(a.values().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn divergence_reports_epoch() {
        let mut split = constant_split(6);
        split.train.frames[3].samples[7] = f64::NAN;
        let mut net = small_net(4);
        let cfg = TrainConfig::default();
        assert!(matches!(train(&mut net, &split, &cfg), Err(Error::Diverged { epoch: 1 })));
    }

    #[test]
    fn class_count_mismatch_rejected() {
        let split = constant_split(4);
        let mut net = Network::init(&NetworkConfig::adaptive(2, 2, 16, 3, 2, 3, 0).unwrap()).unwrap();
        assert!(train(&mut net, &split, &TrainConfig::default()).is_err());
    }

    #[test]
    fn report_text_round_trip() {
        let split = constant_split(5);
        let mut net = small_net(5);
        let cfg = TrainConfig {
            max_iterations: 3,
            min_train_error: 0.0,
            ..TrainConfig::default()
        };
        let r = train(&mut net, &split, &cfg).unwrap();
        let back = TrainReport::from_text(&r.to_text()).unwrap();
        assert_eq!(back, r);
    }
}

//! Adaptive 1D CNN-MLP engine and PPG conditioning pipeline for classifying
//! stress states from wrist-worn photoplethysmography.
//!
//! The crate is organised bottom-up:
//!
//! * [`dataset`] ingests portable subject directories, aligns the 700 Hz label
//!   stream with the 64 Hz PPG stream, cuts pure labeled frames and builds
//!   chronological 40/60 train/test splits.
//! * [`dsp`] normalizes, smooths and band-pass filters PPG with a designed
//!   Chebyshev type II biquad cascade.
//! * [`cnn`] holds the network configuration, parameters and the forward pass
//!   of the combined convolution + subsampling neurons.
//! * [`train`] implements backpropagation, SGD with momentum, the epoch loop
//!   and a finite-difference gradient checker.
//! * [`metrics`] computes confusion matrices and drives configuration grids.
//! * [`experiment`] wires the stages together for one configuration.

pub mod cnn;
pub mod dataset;
pub mod dsp;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod train;

pub use cnn::{Activation, LayerKind, LayerSpec, Network, NetworkConfig, NeuronState, Workspace};

pub use dataset::{ClassMap, ClassMode, Frame, FrameSet, Split, SubjectRecord};
pub use dsp::{BiquadCascade, BiquadSection, FilterDesign, NormalizationStats, PreprocessOptions};
pub use error::{Error, Result};

pub use experiment::ExperimentConfig;
pub use metrics::{ConfusionMatrix, ExperimentRow};
pub use train::{Gradients, LossValue, StopReason, TrainConfig, TrainReport};

//! Backpropagation through the adaptive CNN-MLP, SGD with momentum, the epoch
//! loop with its two stop rules, and a finite-difference gradient checker.

mod backprop;
mod gradcheck;
mod sgd;
mod trainer;

pub use backprop::{
    backward, compute_gradients, frame_loss, one_hot_target, weight_bias_sensitivities, Gradients,
};
pub use gradcheck::{
    analytic_gradients, compare_gradients, gradcheck, numeric_gradients, toy_config, GradcheckReport,
    ParamLocation,
};
pub use sgd::{sgd_step, Sgd};
pub use trainer::{train, EpochRecord, LossValue, StopReason, TrainConfig, TrainReport};

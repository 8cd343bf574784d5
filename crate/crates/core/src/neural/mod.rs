//! Small feed-forward networks: parameters, forward/backward passes, losses,
//! optimizers, classifier training and a finite-difference gradient checker.

mod gradcheck;
mod mlp;
mod optim;
mod train;

pub use gradcheck::{finite_difference_check, GradCheck};
pub(crate) use mlp::{backward_pass, bce_const, forward_pass};
pub use mlp::{
    forward, loss_and_grad, loss_value, predict, relu_margin, Head, Layer, Loss, MlpParams, MlpTemplate, Target,
    LOGIT_CLAMP,
};
pub use optim::{adam_step, sgd_step, AdamState, Optimizer, OptimizerKind};
pub(crate) use train::BatchSampler;
pub use train::{accuracy, train_classifier, FitReport, TrainConfig};

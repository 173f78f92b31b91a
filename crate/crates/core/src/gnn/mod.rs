//! Two-layer GCN: parameters, forward pass, losses, analytic gradients and
//! the Adam optimizer.

mod backward;
mod forward;
mod loss;
mod optim;
mod params;
mod train;

pub use backward::backward;
pub use forward::{forward, softmax_rows, ForwardTrace, GcnInput, Mode};
pub use loss::{
    accuracy, argmax, entropy_loss, nll_loss, soft_loss, LossTerm, Objective, LOG_CLAMP,
};
pub use optim::{adam_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use params::{init_params, ModelParams};
pub use train::{train_supervised, Session, TrainConfig};

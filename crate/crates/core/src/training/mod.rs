//! Mean squared error, Adam and the epoch/batch training loop, plus the
//! finite-difference gradient check.

mod adam;
mod gradcheck;
mod loss;
mod trainer;

use thiserror::Error;

use crate::lstm::LstmError;

pub use adam::{adam_step, AdamHyper, AdamState, ParamSet};
pub use gradcheck::{finite_diff_gradcheck, GradCheckReport};
pub use loss::{mse_grad, mse_loss, PredictionSet};
pub use trainer::{epoch_order, train, train_with, EpochLog, Execution, TrainConfig, TrainOutcome};

#[derive(Debug, Error, PartialEq)]
pub enum TrainingError {
    #[error("prediction set is empty")]
    EmptySet,
    #[error("{actual} actual values but {predicted} predictions")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Network(#[from] LstmError),
}

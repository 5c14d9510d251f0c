//! Bidirectional LSTM sentence classifier with bilinear attention pooling,
//! in three variants: without rule features, with instance vectors fed to
//! the classifier, and with word tags fed to the recurrent layer.
//!
//! Everything is f64 and gradients are written out by hand.

pub mod checkpoint;
mod model;
mod params;
mod tensor;
mod train;

pub use model::{
    accuracy, argmax, example_grad, forward, loss_and_grads, predict, ActivationRecord, Example,
    FeatureView,
};
pub use params::{Dense, Dims, Lstm, ModelParams, Variant, Vocab, Weights, INIT_RANGE};
pub use tensor::{softmax, Mat};
pub use train::{train, EpochStats, TrainConfig, TrainOutcome};

//! Forecaster (feature extractor + prediction head), the separately
//! trained decoder, and the reconstruction/prediction error computations
//! they feed into the interval methods.

mod mlp;
mod rue;
mod train;

pub use mlp::{Activation, Layer, LayerGrads, Mlp};
pub use rue::{
    train_decoder, train_forecaster, CalibrationErrors, ModelConfig, ModelFile, RueModel,
};
pub use train::{train, TrainConfig, TrainReport};

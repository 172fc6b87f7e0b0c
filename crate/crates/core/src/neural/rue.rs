use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Layer, Mlp};
use super::train::{train, TrainConfig, TrainReport};
use crate::error::{Error, Result};

/// Architecture knobs for the forecaster and decoder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Hidden widths of the encoder (and, mirrored, of the decoder).
    pub hidden: Vec<usize>,
    /// Latent width produced by the encoder.
    pub latent: usize,
    pub activation: Activation,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden: vec![],
            latent: 64,
            activation: Activation::Tanh,
        }
    }
}

/// Forecaster encoder + head plus the separately trained decoder.
#[derive(Debug, Clone)]
pub struct RueModel {
    pub encoder: Mlp,
    pub head: Mlp,
    pub decoder: Mlp,
}

/// Feature-wise reconstruction errors, output-wise prediction errors and
/// the scalar L1 reconstruction error per instance.
#[derive(Debug, Clone)]
pub struct CalibrationErrors {
    /// n x I absolute reconstruction errors.
    pub rho: DMatrix<f64>,
    /// n x O absolute prediction errors.
    pub err: DMatrix<f64>,
    /// Per-row L1 norm of rho.
    pub rho_scalar: Vec<f64>,
}

impl CalibrationErrors {
    pub fn n_rows(&self) -> usize {
        self.rho.nrows()
    }
}

/// Train the forecaster and split it into encoder and head at the latent
/// boundary. The encoder keeps its hidden activation on the latent layer.
pub fn train_forecaster(
    x_train: &DMatrix<f64>,
    y_train: &DMatrix<f64>,
    x_val: &DMatrix<f64>,
    y_val: &DMatrix<f64>,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<(Mlp, Mlp, TrainReport)> {
    let input_width = x_train.ncols();
    let output_width = y_train.ncols();
    let mut widths = vec![input_width];
    widths.extend(&model_cfg.hidden);
    widths.push(model_cfg.latent);
    widths.push(output_width);

    let mut forecaster = Mlp::new(&widths, model_cfg.activation, train_cfg.seed)?;
    // The latent layer is hidden in the composite net, so give it the
    // hidden activation before training (Mlp::new made only the final
    // layer linear).
    let n_encoder_layers = model_cfg.hidden.len() + 1;
    for layer in forecaster.layers_mut().iter_mut().take(n_encoder_layers) {
        layer.activation = model_cfg.activation;
    }

    let report = train(&mut forecaster, x_train, y_train, x_val, y_val, train_cfg)?;
    let (encoder, head) = forecaster.split_at(n_encoder_layers)?;
    Ok((encoder, head, report))
}

/// Train the decoder to reconstruct inputs from frozen encoder codes. The
/// encoder is only read; its parameters cannot change.
pub fn train_decoder(
    encoder: &Mlp,
    x_train: &DMatrix<f64>,
    x_val: &DMatrix<f64>,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<(Mlp, TrainReport)> {
    let latent_train = encoder.forward(x_train)?;
    let latent_val = encoder.forward(x_val)?;

    let mut widths = vec![encoder.output_width()];
    widths.extend(model_cfg.hidden.iter().rev());
    widths.push(x_train.ncols());

    let mut decoder = Mlp::new(&widths, model_cfg.activation, train_cfg.seed.wrapping_add(1))?;
    let report = train(
        &mut decoder,
        &latent_train,
        x_train,
        &latent_val,
        x_val,
        train_cfg,
    )?;
    Ok((decoder, report))
}

impl RueModel {
    pub fn input_width(&self) -> usize {
        self.encoder.input_width()
    }

    pub fn output_width(&self) -> usize {
        self.head.output_width()
    }

    /// Forecast: head applied to encoder codes.
    pub fn predict(&self, inputs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let latent = self.encoder.forward(inputs)?;
        self.head.forward(&latent)
    }

    /// Input reconstruction: decoder applied to encoder codes.
    pub fn reconstruct(&self, inputs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let latent = self.encoder.forward(inputs)?;
        self.decoder.forward(&latent)
    }

    /// Absolute reconstruction and prediction errors per instance.
    pub fn compute_errors(
        &self,
        inputs: &DMatrix<f64>,
        targets: &DMatrix<f64>,
    ) -> Result<CalibrationErrors> {
        if targets.ncols() != self.output_width() || targets.nrows() != inputs.nrows() {
            return Err(Error::Dimension(format!(
                "targets {:?} incompatible with inputs {:?} and output width {}",
                targets.shape(),
                inputs.shape(),
                self.output_width()
            )));
        }
        let recon = self.reconstruct(inputs)?;
        let preds = self.predict(inputs)?;
        let rho = DMatrix::from_fn(inputs.nrows(), inputs.ncols(), |i, j| {
            (inputs[(i, j)] - recon[(i, j)]).abs()
        });
        let err = DMatrix::from_fn(targets.nrows(), targets.ncols(), |i, j| {
            (targets[(i, j)] - preds[(i, j)]).abs()
        });
        let rho_scalar = (0..rho.nrows()).map(|i| rho.row(i).sum()).collect();
        Ok(CalibrationErrors {
            rho,
            err,
            rho_scalar,
        })
    }
}

// --- persistence (`model.json`) ---

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LayerFile {
    input_width: usize,
    output_width: usize,
    activation: Activation,
    /// Row-major weights.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MlpFile {
    layers: Vec<LayerFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub seed: u64,
    pub forecaster_val_loss: f64,
    pub decoder_val_loss: f64,
    encoder: MlpFile,
    head: MlpFile,
    decoder: MlpFile,
}

fn mlp_to_file(mlp: &Mlp) -> MlpFile {
    MlpFile {
        layers: mlp
            .layers()
            .iter()
            .map(|l| LayerFile {
                input_width: l.weights.ncols(),
                output_width: l.weights.nrows(),
                activation: l.activation,
                weights: l.weights.transpose().as_slice().to_vec(),
                bias: l.bias.as_slice().to_vec(),
            })
            .collect(),
    }
}

fn mlp_from_file(file: &MlpFile) -> Result<Mlp> {
    let layers = file
        .layers
        .iter()
        .map(|l| {
            if l.weights.len() != l.input_width * l.output_width
                || l.bias.len() != l.output_width
            {
                return Err(Error::Schema(format!(
                    "layer {}x{} has {} weights and {} biases",
                    l.output_width,
                    l.input_width,
                    l.weights.len(),
                    l.bias.len()
                )));
            }
            Ok(Layer {
                weights: DMatrix::from_row_slice(l.output_width, l.input_width, &l.weights),
                bias: DVector::from_column_slice(&l.bias),
                activation: l.activation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Mlp::from_layers(layers)
}

impl ModelFile {
    pub fn from_model(
        model: &RueModel,
        seed: u64,
        forecaster_val_loss: f64,
        decoder_val_loss: f64,
    ) -> Self {
        Self {
            seed,
            forecaster_val_loss,
            decoder_val_loss,
            encoder: mlp_to_file(&model.encoder),
            head: mlp_to_file(&model.head),
            decoder: mlp_to_file(&model.decoder),
        }
    }

    pub fn into_model(&self) -> Result<RueModel> {
        let encoder = mlp_from_file(&self.encoder)?;
        let head = mlp_from_file(&self.head)?;
        let decoder = mlp_from_file(&self.decoder)?;
        if encoder.output_width() != head.input_width()
            || encoder.output_width() != decoder.input_width()
            || decoder.output_width() != encoder.input_width()
        {
            return Err(Error::Schema("inconsistent model widths".into()));
        }
        Ok(RueModel {
            encoder,
            head,
            decoder,
        })
    }
}

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            max_epochs: 200,
            batch_size: 32,
            patience: 20,
            weight_decay: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::Config(format!(
                "weight_decay must be nonnegative, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub best_val_loss: f64,
}

/// Mini-batch gradient descent with early stopping on validation loss.
/// The best-validation parameters are restored before returning.
pub fn train(
    mlp: &mut Mlp,
    x_train: &DMatrix<f64>,
    y_train: &DMatrix<f64>,
    x_val: &DMatrix<f64>,
    y_val: &DMatrix<f64>,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    if x_train.nrows() == 0 || x_val.nrows() == 0 {
        return Err(Error::InsufficientData(
            "training and validation sets must be nonempty".into(),
        ));
    }

    let mut best_val = mlp.loss(x_val, y_val)?;
    if cfg.max_epochs == 0 {
        return Ok(TrainReport {
            epochs_run: 0,
            best_val_loss: best_val,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = x_train.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    let mut best_params = mlp.params_flat();
    let mut epochs_since_best = 0;
    let mut epochs_run = 0;

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let xb = gather_rows(x_train, chunk);
            let yb = gather_rows(y_train, chunk);
            let (loss, grads) = mlp.backward(&xb, &yb)?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite training loss at epoch {epoch} (learning_rate {})",
                    cfg.learning_rate
                )));
            }
            mlp.apply_grads(&grads, cfg.learning_rate, cfg.weight_decay);
        }
        epochs_run = epoch + 1;

        let val = mlp.loss(x_val, y_val)?;
        if !val.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite validation loss at epoch {epoch} (learning_rate {})",
                cfg.learning_rate
            )));
        }
        if val < best_val {
            best_val = val;
            best_params = mlp.params_flat();
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
            if epochs_since_best >= cfg.patience {
                break;
            }
        }
    }

    mlp.set_params_flat(&best_params);
    Ok(TrainReport {
        epochs_run,
        best_val_loss: best_val,
    })
}

fn gather_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::mlp::Activation;
    use rand::Rng;

    fn linear_problem(n: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, 3, |_, _| rng.gen_range(-1.0..1.0));
        // y = A x, A fixed.
        let a = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 0.3, 0.7, -1.1]);
        let y = &x * a.transpose();
        (x, y)
    }

    #[test]
    fn fits_noiseless_linear_map() {
        let (x, y) = linear_problem(200, 5);
        let (xv, yv) = linear_problem(50, 6);
        // Zero hidden layers: a single linear layer can represent A exactly,
        // so validation MSE approaches the least-squares optimum of 0.
        let mut mlp = Mlp::new(&[3, 2], Activation::Relu, 7).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.2,
            max_epochs: 500,
            batch_size: 32,
            patience: 50,
            weight_decay: 0.0,
            seed: 1,
        };
        let report = train(&mut mlp, &x, &y, &xv, &yv, &cfg).unwrap();
        assert!(
            report.best_val_loss < 1e-6,
            "val loss {}",
            report.best_val_loss
        );
    }

    #[test]
    fn zero_epochs_leaves_params_unchanged() {
        let (x, y) = linear_problem(20, 8);
        let mut mlp = Mlp::new(&[3, 4, 2], Activation::Tanh, 3).unwrap();
        let before = mlp.params_flat();
        let cfg = TrainConfig {
            max_epochs: 0,
            ..TrainConfig::default()
        };
        train(&mut mlp, &x, &y, &x, &y, &cfg).unwrap();
        assert_eq!(mlp.params_flat(), before);
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = linear_problem(100, 9);
        let (xv, yv) = linear_problem(30, 10);
        let cfg = TrainConfig {
            max_epochs: 30,
            ..TrainConfig::default()
        };
        let mut a = Mlp::new(&[3, 5, 2], Activation::Tanh, 4).unwrap();
        let mut b = Mlp::new(&[3, 5, 2], Activation::Tanh, 4).unwrap();
        train(&mut a, &x, &y, &xv, &yv, &cfg).unwrap();
        train(&mut b, &x, &y, &xv, &yv, &cfg).unwrap();
        assert_eq!(a.params_flat(), b.params_flat());
    }

    #[test]
    fn divergence_reports_numeric_failure() {
        let (x, y) = linear_problem(50, 11);
        let mut mlp = Mlp::new(&[3, 2], Activation::Relu, 2).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e6,
            max_epochs: 50,
            ..TrainConfig::default()
        };
        let err = train(&mut mlp, &x, &y, &x, &y, &cfg).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)), "{err}");
    }

    #[test]
    fn empty_split_is_error() {
        let (x, y) = linear_problem(10, 12);
        let mut mlp = Mlp::new(&[3, 2], Activation::Relu, 2).unwrap();
        let empty_x = DMatrix::zeros(0, 3);
        let empty_y = DMatrix::zeros(0, 2);
        assert!(train(&mut mlp, &empty_x, &empty_y, &x, &y, &TrainConfig::default()).is_err());
        assert!(train(&mut mlp, &x, &y, &empty_x, &empty_y, &TrainConfig::default()).is_err());
    }
}

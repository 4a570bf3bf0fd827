//! Mini-batch Adam training of the per-coefficient networks.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CoefficientTag, Mlp, TagDataset, TrainingDataset};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Replaces every default architecture with `(hidden layers, width)`.
    pub hidden: Option<(usize, usize)>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            batch_size: 50,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            hidden: None,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidParameter("epochs and batch size must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::InvalidParameter("invalid Adam hyperparameters".into()));
        }
        Ok(())
    }

    fn widths(&self, tag: CoefficientTag) -> Vec<usize> {
        match self.hidden {
            Some((depth, width)) => {
                let mut w = vec![crate::nondim::FEATURE_COUNT];
                w.extend(std::iter::repeat(width).take(depth));
                w.push(1);
                w
            }
            None => tag.default_widths(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train: f64,
    pub validation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub tag: CoefficientTag,
    pub widths: Vec<usize>,
    pub seed: u64,
    pub losses: Vec<EpochLoss>,
}

impl TrainReport {
    pub fn final_train(&self) -> f64 {
        self.losses.last().map_or(f64::NAN, |l| l.train)
    }

    pub fn final_validation(&self) -> Option<f64> {
        self.losses.last().and_then(|l| l.validation)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel<T> {
    pub tag: CoefficientTag,
    pub mlp: Mlp<T>,
    pub report: TrainReport,
}

fn model_seed(master: u64, index: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = master.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Trains one network on one table.
pub fn train_model<T: Scalar>(data: &TagDataset<T>, widths: &[usize], cfg: &TrainConfig, seed: u64) -> Result<(Mlp<T>, TrainReport)> {
    cfg.validate()?;
    if data.train_x.is_empty() {
        return Err(Error::InvalidParameter(format!("{}: training split is empty", data.tag)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mlp = Mlp::he_uniform(widths, &mut rng)?;
    if data.train_x[0].len() != mlp.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "{}: rows have {} features, network expects {}",
            data.tag,
            data.train_x[0].len(),
            mlp.input_dim()
        )));
    }
    let n_params: usize = mlp.params_mut().count();
    let mut m = vec![T::zero(); n_params];
    let mut v = vec![T::zero(); n_params];
    let (b1, b2) = (T::lit(cfg.beta1), T::lit(cfg.beta2));
    let (lr, eps) = (T::lit(cfg.learning_rate), T::lit(cfg.epsilon));
    let mut b1t = T::one();
    let mut b2t = T::one();
    let mut order: Vec<usize> = (0..data.train_x.len()).collect();
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let (_, grads) = mlp.mse_gradients(&data.train_x, &data.train_y, batch);
            b1t *= b1;
            b2t *= b2;
            let step = lr * (T::one() - b2t).sqrt() / (T::one() - b1t);
            for (((p, g), mi), vi) in mlp.params_mut().zip(grads.values()).zip(&mut m).zip(&mut v) {
                *mi = b1 * *mi + (T::one() - b1) * *g;
                *vi = b2 * *vi + (T::one() - b2) * *g * *g;
                *p -= step * *mi / (vi.sqrt() + eps);
            }
        }
        let train = mlp.mse(&data.train_x, &data.train_y).as_f64();
        let validation = (!data.val_x.is_empty()).then(|| mlp.mse(&data.val_x, &data.val_y).as_f64());
        if !train.is_finite() || validation.is_some_and(|v| !v.is_finite()) {
            return Err(Error::Divergence(format!(
                "{}: non-finite loss at epoch {}",
                data.tag,
                epoch + 1
            )));
        }
        losses.push(EpochLoss {
            epoch: epoch + 1,
            train,
            validation,
        });
    }
    let report = TrainReport {
        tag: data.tag,
        widths: widths.to_vec(),
        seed,
        losses,
    };
    Ok((mlp, report))
}

/// Trains every model in the dataset in parallel. Each model's seed is derived
/// from the master seed and its position, so results do not depend on scheduling.
pub fn train_models<T: Scalar>(dataset: &TrainingDataset<T>, cfg: &TrainConfig) -> Result<Vec<TrainedModel<T>>> {
    cfg.validate()?;
    dataset
        .tables
        .par_iter()
        .enumerate()
        .map(|(i, table)| {
            let widths = cfg.widths(table.tag);
            let (mlp, report) = train_model(table, &widths, cfg, model_seed(cfg.seed, i))?;
            Ok(TrainedModel {
                tag: table.tag,
                mlp,
                report,
            })
        })
        .collect()
}

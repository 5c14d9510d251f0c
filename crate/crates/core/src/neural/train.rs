use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{accuracy, loss_and_grads, Example};
use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::exec::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Seeds the shuffling stream. Initialization is seeded separately by
    /// [`ModelParams::init`].
    pub seed: u64,
    /// Stop after this many epochs without dev-accuracy improvement.
    pub patience: Option<usize>,
    /// Rescale the batch gradient to at most this L2 norm.
    pub clip_norm: Option<f64>,
    #[serde(skip, default)]
    pub exec: Exec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 8,
            learning_rate: 0.1,
            seed: 0,
            patience: None,
            clip_norm: Some(5.0),
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub dev_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub history: Vec<EpochStats>,
    /// Set when training stopped on a non-finite loss or parameter; `params`
    /// then holds the last finite state.
    pub aborted: Option<String>,
}

pub fn train(
    mut params: ModelParams,
    train_set: &[Example],
    dev_set: Option<&[Example]>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if train_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be positive".into()));
    }
    if let Some(bad) = train_set.iter().find(|e| e.label >= params.dims.classes) {
        return Err(Error::InvalidConfig(format!(
            "label {} out of range for {} classes",
            bad.label, params.dims.classes
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, ModelParams)> = None;
    let mut stale = 0;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &train_set[i]).collect();
            let (loss, mut grads) = match loss_and_grads(&params, &batch, cfg.exec) {
                Ok(v) => v,
                Err(Error::Numerical(msg)) => return Ok(aborted(params, history, msg)),
                Err(e) => return Err(e),
            };
            if let Some(max) = cfg.clip_norm {
                let norm = grads.l2_norm();
                if norm > max {
                    grads.scale(max / norm);
                }
            }
            if !grads.all_finite() {
                return Ok(aborted(params, history, "non-finite gradient".into()));
            }
            let mut next = params.weights.clone();
            next.add_scaled(-cfg.learning_rate, &grads);
            if !next.all_finite() {
                return Ok(aborted(params, history, "non-finite parameters".into()));
            }
            params.weights = next;
            epoch_loss += loss * chunk.len() as f64;
        }
        let dev_accuracy = match dev_set {
            Some(dev) => Some(accuracy(&params, dev, cfg.exec)?),
            None => None,
        };
        history.push(EpochStats {
            epoch: epoch + 1,
            loss: epoch_loss / train_set.len() as f64,
            dev_accuracy,
        });

        if let (Some(patience), Some(acc)) = (cfg.patience, dev_accuracy) {
            match &best {
                Some((b, _)) if acc <= *b => {
                    stale += 1;
                    if stale >= patience {
                        break;
                    }
                }
                _ => {
                    best = Some((acc, params.clone()));
                    stale = 0;
                }
            }
        }
    }

    if let Some((_, p)) = best {
        params = p;
    }
    Ok(TrainOutcome {
        params,
        history,
        aborted: None,
    })
}

fn aborted(params: ModelParams, history: Vec<EpochStats>, msg: String) -> TrainOutcome {
    TrainOutcome {
        params,
        history,
        aborted: Some(msg),
    }
}

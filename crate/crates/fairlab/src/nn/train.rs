//! SGD training loop: per-epoch orders, batch updates, per-epoch test
//! evaluation, and checkpoint retention.

use ndarray::Axis;
use serde::{Deserialize, Serialize};

use crate::data::{epoch_order, reference_order, DataOrder, Dataset};
use crate::metrics::{
    self, confusion, demographic_parity, MetricError, MetricRecord,
};
use crate::nn::{
    backward, forward, init_model, loss_and_logit_grad, sgd_step, EoTerm, LossConfig, Model,
    NnError,
};
use crate::rng::{Prng, DROPOUT_STREAM};
use crate::stats::Trajectory;

/// All training hyperparameters plus the two decoupled seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub hidden_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub dropout_rate: f64,
    pub weight_seed: u64,
    pub shuffle_seed: u64,
    pub loss: LossConfig,
    /// (T1, T2) with 1 <= T1 <= T2 <= epochs.
    pub record_window: (usize, usize),
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: vec![64],
            learning_rate: 1e-3,
            batch_size: 128,
            epochs: 300,
            dropout_rate: 0.0,
            weight_seed: 0,
            shuffle_seed: 1,
            loss: LossConfig::PlainCe,
            record_window: (100, 300),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, train_size: usize) -> Result<(), NnError> {
        let mut problems = Vec::new();
        if self.hidden_sizes.is_empty() || self.hidden_sizes.iter().any(|&h| h == 0) {
            problems.push("hidden_sizes must be nonempty positive ints".to_string());
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            problems.push(format!("learning_rate {} must be finite and >= 0", self.learning_rate));
        }
        if self.batch_size == 0 || self.batch_size > train_size {
            problems.push(format!(
                "batch_size {} must be in [1, train size {train_size}]",
                self.batch_size
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            problems.push(format!("dropout_rate {} must be in [0, 1)", self.dropout_rate));
        }
        let (t1, t2) = self.record_window;
        if self.epochs > 0 && !(1 <= t1 && t1 <= t2 && t2 <= self.epochs) {
            problems.push(format!(
                "record_window ({t1}, {t2}) must satisfy 1 <= T1 <= T2 <= {}",
                self.epochs
            ));
        }
        if let LossConfig::WeightedCe { weights } = &self.loss {
            if weights.len() != train_size {
                problems.push(format!(
                    "weighted_ce needs {train_size} weights, got {}",
                    weights.len()
                ));
            }
            if weights.iter().any(|&w| !(w > 0.0)) {
                problems.push("weighted_ce weights must be positive".to_string());
            }
        }
        if let LossConfig::CePlusEo { lambda } = &self.loss {
            if !(*lambda >= 0.0) {
                problems.push(format!("eo lambda {lambda} must be nonnegative"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(NnError::BadConfig(problems.join("; ")))
        }
    }
}

/// The single train/val/test partition reused across all runs.
#[derive(Debug, Clone)]
pub struct DataSplits {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

/// Per-epoch checkpoint retention policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Retention {
    None,
    /// Keep epochs inside the record window [T1, T2].
    Window,
    All,
}

pub struct RunOutput {
    pub trajectory: Trajectory,
    pub model: Model,
    /// Retained (epoch, model) checkpoints, ascending by epoch.
    pub checkpoints: Vec<(usize, Model)>,
    /// Validation average odds per epoch (NaN where undefined).
    pub val_avg_odds: Vec<f64>,
}

/// One epoch of SGD: consumes the order left to right in consecutive batches
/// (final short batch included), one step per batch; the dropout stream is
/// derived from the epoch number.
pub fn train_epoch(
    model: &mut Model,
    train: &Dataset,
    order: &DataOrder,
    config: &TrainConfig,
    epoch: usize,
) -> Result<(), NnError> {
    let mut dropout_rng = Prng::from_parts(epoch as u64, DROPOUT_STREAM);
    let use_dropout = config.dropout_rate > 0.0;
    for batch in order.batches(config.batch_size) {
        let x = train.features.select(Axis(0), batch);
        let labels: Vec<u8> = batch.iter().map(|&i| train.labels[i]).collect();
        let rng = use_dropout.then_some(&mut dropout_rng);
        let (_, cache) = forward(model, &x, config.dropout_rate, rng)?;

        let batch_weights: Option<Vec<f64>> = match &config.loss {
            LossConfig::WeightedCe { weights } => {
                Some(batch.iter().map(|&i| weights[i]).collect())
            }
            _ => None,
        };
        let groups: Vec<u8>;
        let eo = match &config.loss {
            LossConfig::CePlusEo { lambda } => {
                groups = batch.iter().map(|&i| train.sensitive[i]).collect();
                Some(EoTerm {
                    groups: &groups,
                    lambda: *lambda,
                })
            }
            _ => None,
        };
        let (_, dlogits) =
            loss_and_logit_grad(&cache.logits, &labels, batch_weights.as_deref(), eo)?;
        let grads = backward(model, &cache, &dlogits);
        sgd_step(model, &grads, config.learning_rate);
    }
    Ok(())
}

/// All test metrics for one model. Demographic parity degenerates when a
/// group has no predicted positives; the continuous limit (100 when only one
/// group predicts positives, 0 when neither does) stands in so a transient
/// all-negative phase does not abort a run.
pub fn evaluate(model: &Model, eval: &Dataset, epoch: usize) -> Result<MetricRecord, NnError> {
    let preds = model.predict(&eval.features)?;
    let conf = confusion(&preds, &eval.labels, &eval.sensitive)?;
    let dp = match demographic_parity(&conf) {
        Ok(v) => v,
        Err(MetricError::Undefined { .. }) => {
            if conf.predicted_positives(0) == 0 && conf.predicted_positives(1) == 0 {
                0.0
            } else {
                100.0
            }
        }
        Err(e) => return Err(e.into()),
    };
    Ok(MetricRecord {
        epoch,
        f1: metrics::f1(&conf)?,
        avg_odds: metrics::average_odds(&conf)?,
        eopp: metrics::equal_opportunity(&conf)?,
        dp,
        accuracy: metrics::overall_accuracy(&preds, &eval.labels)?,
        subgroup_acc: metrics::subgroup_accuracy(&preds, &eval.labels, &eval.sensitive)?,
    })
}

fn val_avg_odds(model: &Model, val: &Dataset) -> f64 {
    model
        .predict(&val.features)
        .ok()
        .and_then(|preds| confusion(&preds, &val.labels, &val.sensitive).ok())
        .and_then(|conf| metrics::average_odds(&conf).ok())
        .unwrap_or(f64::NAN)
}

/// Full training run: for t = 1..=T the epoch order is the t-seeded reshuffle
/// of the r_s reference order; test metrics are recorded after every epoch.
pub fn train_run(
    splits: &DataSplits,
    config: &TrainConfig,
    retention: Retention,
    run_id: usize,
) -> Result<RunOutput, NnError> {
    config.validate(splits.train.n())?;
    let mut model = init_model(splits.train.dim(), &config.hidden_sizes, config.weight_seed);
    let reference = reference_order(splits.train.n(), config.shuffle_seed);
    let (t1, t2) = config.record_window;

    let mut records = Vec::with_capacity(config.epochs);
    let mut checkpoints = Vec::new();
    let mut val_ao = Vec::with_capacity(config.epochs);
    for t in 1..=config.epochs {
        let order = epoch_order(&reference, t);
        train_epoch(&mut model, &splits.train, &order, config, t)?;
        records.push(evaluate(&model, &splits.test, t)?);
        val_ao.push(val_avg_odds(&model, &splits.val));
        let keep = match retention {
            Retention::None => false,
            Retention::Window => t >= t1 && t <= t2,
            Retention::All => true,
        };
        if keep {
            checkpoints.push((t, model.clone()));
        }
    }
    Ok(RunOutput {
        trajectory: Trajectory {
            run_id,
            weight_seed: config.weight_seed,
            shuffle_seed: config.shuffle_seed,
            records,
        },
        model,
        checkpoints,
        val_avg_odds: val_ao,
    })
}

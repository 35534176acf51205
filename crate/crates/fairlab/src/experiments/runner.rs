//! Shared run machinery: the seed schedule, parallel run execution with
//! deterministic aggregation order, checkpoint pools, and batch fine-tuning.

use rayon::prelude::*;

use crate::data::{DataOrder, Dataset};
use crate::experiments::ExperimentError;
use crate::nn::{
    backward, forward, loss_and_logit_grad, sgd_step, train_run, DataSplits, EoTerm, LossConfig,
    Model, Retention, RunOutput, TrainConfig,
};
use crate::rng::{Prng, DROPOUT_STREAM};
use ndarray::Axis;

/// Run i uses weight_seed = master + 2i, shuffle_seed = master + 2i + 1,
/// unless a decouple mode pins one of them.
pub fn seeds_for(master_seed: u64, run_index: usize) -> (u64, u64) {
    let base = master_seed.wrapping_add(2 * run_index as u64);
    (base, base.wrapping_add(1))
}

/// Executes the runs concurrently; results come back in input order, so
/// aggregation is identical to sequential execution.
pub fn run_parallel(
    splits: &DataSplits,
    configs: &[TrainConfig],
    retention: Retention,
) -> Result<Vec<RunOutput>, ExperimentError> {
    configs
        .par_iter()
        .enumerate()
        .map(|(i, config)| train_run(splits, config, retention, i).map_err(ExperimentError::from))
        .collect()
}

/// Draws `count` checkpoints uniformly (seeded) from the record window of
/// both-random runs; returns (run_id, epoch, model, config) tuples sorted by
/// draw order.
pub fn checkpoint_pool(
    splits: &DataSplits,
    base_config: &TrainConfig,
    n_runs: usize,
    count: usize,
    master_seed: u64,
) -> Result<Vec<(usize, usize, Model)>, ExperimentError> {
    let configs: Vec<TrainConfig> = (0..n_runs)
        .map(|i| {
            let (w, s) = seeds_for(master_seed, i);
            TrainConfig {
                weight_seed: w,
                shuffle_seed: s,
                ..base_config.clone()
            }
        })
        .collect();
    let outputs = run_parallel(splits, &configs, Retention::Window)?;
    let mut all: Vec<(usize, usize, &Model)> = Vec::new();
    for (run_id, out) in outputs.iter().enumerate() {
        for (epoch, model) in &out.checkpoints {
            all.push((run_id, *epoch, model));
        }
    }
    if all.is_empty() {
        return Err(ExperimentError::BadParams(
            "no checkpoints in the record window".into(),
        ));
    }
    let mut rng = Prng::from_parts(master_seed, 0xC4EC);
    let mut picks = Vec::with_capacity(count);
    let mut indices: Vec<usize> = (0..all.len()).collect();
    rng.shuffle(&mut indices);
    for k in 0..count {
        let (run_id, epoch, model) = all[indices[k % indices.len()]];
        picks.push((run_id, epoch, model.clone()));
    }
    Ok(picks)
}

/// One pass of SGD over the given batches with the parent run's
/// hyperparameters; the dropout stream is seeded past the parent's epochs.
pub fn finetune_on_batches(
    model: &mut Model,
    train: &Dataset,
    batches: &[&[usize]],
    config: &TrainConfig,
) -> Result<(), ExperimentError> {
    let mut dropout_rng = Prng::from_parts(config.epochs as u64 + 1, DROPOUT_STREAM);
    let use_dropout = config.dropout_rate > 0.0;
    for batch in batches {
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

/// Fine-tunes one full epoch on the given order.
pub fn finetune_on_order(
    model: &mut Model,
    train: &Dataset,
    order: &DataOrder,
    config: &TrainConfig,
) -> Result<(), ExperimentError> {
    let batches: Vec<&[usize]> = order.batches(config.batch_size).collect();
    finetune_on_batches(model, train, &batches, config)
}

//! Suffix fine-tuning: how many common final batches it takes to pull a
//! diverse pool of checkpoints toward the same fairness.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{epoch_order, reference_order, DataOrder};
use crate::experiments::{
    runner::finetune_on_batches, ExperimentError, NamedTable,
};
use crate::nn::{evaluate, DataSplits, Model, TrainConfig};
use crate::rng::Prng;
use crate::stats::{quartiles, Quartiles};

/// Which b batches of the donor order each checkpoint is fine-tuned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SuffixVariant {
    /// The last b batches (the donor epoch's most recent gradients).
    LastBatches,
    /// b batches sampled without replacement from the donor order.
    RandomBatches { seed: u64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SuffixRow {
    pub b: usize,
    pub avg_odds: Quartiles,
    pub f1: Quartiles,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuffixSweep {
    pub variant: SuffixVariant,
    pub rows: Vec<SuffixRow>,
}

impl SuffixSweep {
    pub fn row(&self, b: usize) -> &SuffixRow {
        self.rows.iter().find(|r| r.b == b).expect("b in sweep")
    }

    pub fn tables(&self) -> Vec<NamedTable> {
        let mut t = NamedTable::new(
            "suffix",
            &[
                "b", "ao_min", "ao_q1", "ao_median", "ao_q3", "ao_max", "f1_min", "f1_q1",
                "f1_median", "f1_q3", "f1_max",
            ],
        );
        for r in &self.rows {
            t.push(vec![
                r.b as f64,
                r.avg_odds.min,
                r.avg_odds.q1,
                r.avg_odds.median,
                r.avg_odds.q3,
                r.avg_odds.max,
                r.f1.min,
                r.f1.q1,
                r.f1.median,
                r.f1.q3,
                r.f1.max,
            ]);
        }
        vec![t]
    }
}

/// Rebuilds the donor epochs with the best and worst validation average odds
/// of a finished run; returns (best_order, worst_order, best_epoch,
/// worst_epoch). NaN entries (undefined validation AO) are skipped.
pub fn donor_orders(
    n: usize,
    shuffle_seed: u64,
    val_avg_odds: &[f64],
) -> Result<(DataOrder, DataOrder, usize, usize), ExperimentError> {
    let mut best: Option<(usize, f64)> = None;
    let mut worst: Option<(usize, f64)> = None;
    for (i, &v) in val_avg_odds.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        let epoch = i + 1;
        if best.is_none_or(|(_, bv)| v < bv) {
            best = Some((epoch, v));
        }
        if worst.is_none_or(|(_, wv)| v > wv) {
            worst = Some((epoch, v));
        }
    }
    let (Some((best_epoch, _)), Some((worst_epoch, _))) = (best, worst) else {
        return Err(ExperimentError::BadParams(
            "no defined validation average odds to pick donors from".into(),
        ));
    };
    let reference = reference_order(n, shuffle_seed);
    Ok((
        epoch_order(&reference, best_epoch),
        epoch_order(&reference, worst_epoch),
        best_epoch,
        worst_epoch,
    ))
}

/// For each b: one fine-tuning pass of every checkpoint on b batches of the
/// donor order, then the quartiles of test AO and F1 across checkpoints.
/// b = 0 is the unmodified baseline.
pub fn suffix_finetune(
    splits: &DataSplits,
    checkpoints: &[(usize, usize, Model)],
    donor_order: &DataOrder,
    b_values: &[usize],
    config: &TrainConfig,
    variant: SuffixVariant,
) -> Result<SuffixSweep, ExperimentError> {
    if checkpoints.is_empty() {
        return Err(ExperimentError::BadParams("empty checkpoint pool".into()));
    }
    let all_batches: Vec<&[usize]> = donor_order.batches(config.batch_size).collect();
    let n_batches = all_batches.len();
    if let Some(&bad) = b_values.iter().find(|&&b| b > n_batches) {
        return Err(ExperimentError::BadParams(format!(
            "b = {bad} exceeds the {n_batches} batches per epoch"
        )));
    }
    let mut rows = Vec::with_capacity(b_values.len());
    for &b in b_values {
        let chosen: Vec<&[usize]> = match variant {
            SuffixVariant::LastBatches => all_batches[n_batches - b..].to_vec(),
            SuffixVariant::RandomBatches { seed } => {
                let mut idx: Vec<usize> = (0..n_batches).collect();
                Prng::from_parts(seed, b as u64).shuffle(&mut idx);
                idx.truncate(b);
                idx.into_iter().map(|i| all_batches[i]).collect()
            }
        };
        let evals: Vec<(f64, f64)> = checkpoints
            .par_iter()
            .map(|(_, _, model)| {
                let mut m = model.clone();
                finetune_on_batches(&mut m, &splits.train, &chosen, config)?;
                let rec = evaluate(&m, &splits.test, 1)?;
                Ok::<_, ExperimentError>((rec.avg_odds, rec.f1))
            })
            .collect::<Result<_, _>>()?;
        let aos: Vec<f64> = evals.iter().map(|e| e.0).collect();
        let f1s: Vec<f64> = evals.iter().map(|e| e.1).collect();
        rows.push(SuffixRow {
            b,
            avg_odds: quartiles(&aos)?,
            f1: quartiles(&f1s)?,
        });
    }
    Ok(SuffixSweep { variant, rows })
}

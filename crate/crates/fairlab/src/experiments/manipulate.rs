//! Ratio-manipulation sweep: steering subgroup accuracy with one epoch of a
//! ratio-controlled data order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{build_ratio_order, RatioSpec};
use crate::experiments::{runner::finetune_on_order, ExperimentError, NamedTable};
use crate::nn::{evaluate, DataSplits, Model, TrainConfig};
use crate::stats::{quartiles, Quartiles};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManipulateRow {
    /// Varied group's positives-to-negatives ratio in the suffix.
    pub ratio: f64,
    pub subgroup_acc: [Quartiles; 4],
    pub overall_acc: Quartiles,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManipulateSweep {
    pub varied_group: u8,
    /// Unmodified checkpoints, for reference.
    pub baseline: ManipulateRow,
    pub rows: Vec<ManipulateRow>,
}

impl ManipulateSweep {
    pub fn tables(&self) -> Vec<NamedTable> {
        let mut t = NamedTable::new(
            "manipulate",
            &[
                "ratio",
                "overall_median",
                "overall_min",
                "overall_max",
                "acc_f_pos_median",
                "acc_m_pos_median",
                "acc_m_neg_median",
                "acc_f_neg_median",
            ],
        );
        let mut push = |r: &ManipulateRow| {
            t.push(vec![
                r.ratio,
                r.overall_acc.median,
                r.overall_acc.min,
                r.overall_acc.max,
                r.subgroup_acc[0].median,
                r.subgroup_acc[1].median,
                r.subgroup_acc[2].median,
                r.subgroup_acc[3].median,
            ]);
        };
        push(&self.baseline);
        for r in &self.rows {
            push(r);
        }
        vec![t]
    }
}

fn summarize_models(
    evals: &[([f64; 4], f64)],
    ratio: f64,
) -> Result<ManipulateRow, ExperimentError> {
    let mut subgroup_acc: [Quartiles; 4] = [quartiles(&[0.0])?; 4];
    for g in 0..4 {
        let vals: Vec<f64> = evals.iter().map(|e| e.0[g]).collect();
        subgroup_acc[g] = quartiles(&vals)?;
    }
    let overall: Vec<f64> = evals.iter().map(|e| e.1).collect();
    Ok(ManipulateRow {
        ratio,
        subgroup_acc,
        overall_acc: quartiles(&overall)?,
    })
}

/// For each ratio r: one common ratio-controlled order, one epoch of
/// fine-tuning per checkpoint, then subgroup/overall accuracy quartiles
/// across checkpoints. Ratio NaN in the baseline row marks "no fine-tuning".
pub fn manipulate_sweep(
    splits: &DataSplits,
    checkpoints: &[(usize, usize, Model)],
    ratio_values: &[f64],
    varied_group: u8,
    config: &TrainConfig,
    master_seed: u64,
) -> Result<ManipulateSweep, ExperimentError> {
    if checkpoints.is_empty() {
        return Err(ExperimentError::BadParams("empty checkpoint pool".into()));
    }
    if ratio_values.iter().any(|&r| !(r > 0.0)) {
        return Err(ExperimentError::BadParams(
            "ratio values must be positive".into(),
        ));
    }
    let baseline_evals: Vec<([f64; 4], f64)> = checkpoints
        .par_iter()
        .map(|(_, _, model)| {
            let rec = evaluate(model, &splits.test, 1)?;
            Ok::<_, ExperimentError>((rec.subgroup_acc, rec.accuracy))
        })
        .collect::<Result<_, _>>()?;
    let baseline = summarize_models(&baseline_evals, f64::NAN)?;

    let mut rows = Vec::with_capacity(ratio_values.len());
    for (k, &ratio) in ratio_values.iter().enumerate() {
        let order = build_ratio_order(
            &splits.train,
            &RatioSpec {
                varied_group,
                pos_to_neg: ratio,
            },
            config.batch_size,
            master_seed.wrapping_add(k as u64),
        )?;
        let evals: Vec<([f64; 4], f64)> = checkpoints
            .par_iter()
            .map(|(_, _, model)| {
                let mut m = model.clone();
                finetune_on_order(&mut m, &splits.train, &order, config)?;
                let rec = evaluate(&m, &splits.test, 1)?;
                Ok::<_, ExperimentError>((rec.subgroup_acc, rec.accuracy))
            })
            .collect::<Result<_, _>>()?;
        rows.push(summarize_models(&evals, ratio)?);
    }
    Ok(ManipulateSweep {
        varied_group,
        baseline,
        rows,
    })
}

//! Cumulative prediction-change tracking across consecutive checkpoints.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::experiments::{ExperimentError, NamedTable};
use crate::metrics::SUBGROUPS;
use crate::nn::Model;

/// Percent of each subgroup whose prediction changed at least once between
/// the first checkpoint and epoch k, for each later checkpoint k.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChangeTracking {
    /// Epochs of the second and later checkpoints.
    pub epochs: Vec<usize>,
    /// Cumulative unique-changed percent per canonical subgroup, per epoch.
    pub subgroup_pct: [Vec<f64>; 4],
    pub overall_pct: Vec<f64>,
}

impl ChangeTracking {
    pub fn final_subgroup_pct(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (g, series) in self.subgroup_pct.iter().enumerate() {
            out[g] = *series.last().expect("at least one step");
        }
        out
    }

    pub fn tables(&self) -> Vec<NamedTable> {
        let mut t = NamedTable::new(
            "changes",
            &[
                "epoch", "overall", "pct_a0y1", "pct_m_pos", "pct_m_neg", "pct_f_neg",
            ],
        );
        for (i, &epoch) in self.epochs.iter().enumerate() {
            t.push(vec![
                epoch as f64,
                self.overall_pct[i],
                self.subgroup_pct[0][i],
                self.subgroup_pct[1][i],
                self.subgroup_pct[2][i],
                self.subgroup_pct[3][i],
            ]);
        }
        vec![t]
    }
}

/// Tracks, per subgroup, the cumulative share of points whose prediction
/// flipped at least once along the checkpoint sequence.
pub fn prediction_change_tracking(
    checkpoints: &[(usize, Model)],
    eval: &Dataset,
) -> Result<ChangeTracking, ExperimentError> {
    if checkpoints.len() < 2 {
        return Err(ExperimentError::BadParams(format!(
            "change tracking needs at least 2 checkpoints, got {}",
            checkpoints.len()
        )));
    }
    let n = eval.n();
    let counts = eval.subgroup_counts();
    for (g, &c) in counts.iter().enumerate() {
        if c == 0 {
            let (a, y) = SUBGROUPS[g];
            return Err(ExperimentError::BadParams(format!(
                "empty subgroup (a={a}, y={y}) in eval set"
            )));
        }
    }
    let mut prev = checkpoints[0].1.predict(&eval.features)?;
    let mut changed = vec![false; n];
    let mut epochs = Vec::with_capacity(checkpoints.len() - 1);
    let mut subgroup_pct: [Vec<f64>; 4] = Default::default();
    let mut overall_pct = Vec::with_capacity(checkpoints.len() - 1);
    for (epoch, model) in &checkpoints[1..] {
        let preds = model.predict(&eval.features)?;
        for i in 0..n {
            if preds[i] != prev[i] {
                changed[i] = true;
            }
        }
        prev = preds;
        let mut changed_counts = [0usize; 4];
        let mut total = 0usize;
        for (i, &c) in changed.iter().enumerate() {
            if c {
                changed_counts[eval.subgroup_of(i)] += 1;
                total += 1;
            }
        }
        epochs.push(*epoch);
        for g in 0..4 {
            subgroup_pct[g].push(100.0 * changed_counts[g] as f64 / counts[g] as f64);
        }
        overall_pct.push(100.0 * total as f64 / n as f64);
    }
    Ok(ChangeTracking {
        epochs,
        subgroup_pct,
        overall_pct,
    })
}

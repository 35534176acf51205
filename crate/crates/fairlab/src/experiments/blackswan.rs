//! Black-swan surfaces: how checkpoint-hoarding budget (epochs kept per run
//! x number of runs) buys extreme fairness checkpoints.

use serde::{Deserialize, Serialize};

use crate::experiments::{
    runner::{run_parallel, seeds_for},
    ExperimentError, NamedTable,
};
use crate::nn::{DataSplits, Retention, TrainConfig};
use crate::stats::{hausdorff, pareto_front, ParetoPoint, Trajectory};

/// Matrices over (t, s): rows index t = 1..=t_max epochs kept per run,
/// columns index s = 1..=s_max runs sampled; both averaged over repeats.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlackSwanSurface {
    pub t_max: usize,
    pub s_max: usize,
    pub repeats: usize,
    /// best_ao[t-1][s-1] = mean over repeats of min AO among the t*s points.
    pub best_ao: Vec<Vec<f64>>,
    /// Mean Hausdorff distance from the (t,s) Pareto front to the full
    /// (t_max, s_max) front of the same repeat.
    pub hausdorff_to_best: Vec<Vec<f64>>,
}

impl BlackSwanSurface {
    pub fn tables(&self) -> Vec<NamedTable> {
        let mut t = NamedTable::new("surface", &["t", "s", "best_ao", "hausdorff"]);
        for ti in 0..self.t_max {
            for si in 0..self.s_max {
                t.push(vec![
                    (ti + 1) as f64,
                    (si + 1) as f64,
                    self.best_ao[ti][si],
                    self.hausdorff_to_best[ti][si],
                ]);
            }
        }
        vec![t]
    }
}

fn points_for(trajectories: &[Trajectory], t: usize, s: usize) -> Vec<ParetoPoint> {
    let mut points = Vec::with_capacity(t * s);
    for traj in &trajectories[..s] {
        let records = &traj.records;
        for rec in &records[records.len() - t..] {
            points.push(ParetoPoint {
                fairness: rec.avg_odds,
                performance: rec.f1,
                run_id: traj.run_id,
                epoch: rec.epoch,
            });
        }
    }
    points
}

/// For every budget (t, s): sample s fresh runs, keep each run's last t
/// epochs, and score the pool by its best (lowest) AO and by the Hausdorff
/// distance of its Pareto front from the full-budget front.
pub fn black_swan_surface(
    splits: &DataSplits,
    base_config: &TrainConfig,
    t_max: usize,
    s_max: usize,
    repeats: usize,
    master_seed: u64,
) -> Result<BlackSwanSurface, ExperimentError> {
    if t_max < 1 || s_max < 1 || repeats < 1 {
        return Err(ExperimentError::BadParams(
            "t_max, s_max, and repeats must all be at least 1".into(),
        ));
    }
    if t_max > base_config.epochs {
        return Err(ExperimentError::BadParams(format!(
            "t_max {t_max} exceeds the {} training epochs",
            base_config.epochs
        )));
    }
    let mut best_ao = vec![vec![0.0f64; s_max]; t_max];
    let mut hd = vec![vec![0.0f64; s_max]; t_max];
    for rep in 0..repeats {
        let configs: Vec<TrainConfig> = (0..s_max)
            .map(|i| {
                let (w, s) = seeds_for(master_seed, rep * s_max + i);
                TrainConfig {
                    weight_seed: w,
                    shuffle_seed: s,
                    ..base_config.clone()
                }
            })
            .collect();
        let outputs = run_parallel(splits, &configs, Retention::None)?;
        let trajectories: Vec<Trajectory> = outputs.into_iter().map(|o| o.trajectory).collect();
        let full_front = pareto_front(&points_for(&trajectories, t_max, s_max));
        for t in 1..=t_max {
            for s in 1..=s_max {
                let points = points_for(&trajectories, t, s);
                let min_ao = points
                    .iter()
                    .map(|p| p.fairness)
                    .fold(f64::INFINITY, f64::min);
                best_ao[t - 1][s - 1] += min_ao;
                let front = pareto_front(&points);
                hd[t - 1][s - 1] += hausdorff(&front, &full_front)?;
            }
        }
    }
    let m = repeats as f64;
    for row in best_ao.iter_mut().chain(hd.iter_mut()) {
        for v in row {
            *v /= m;
        }
    }
    Ok(BlackSwanSurface {
        t_max,
        s_max,
        repeats,
        best_ao,
        hausdorff_to_best: hd,
    })
}

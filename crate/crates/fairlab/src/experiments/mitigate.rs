//! Mitigation comparison: training-time interventions (reweighing, fairness
//! penalty) vs one post-hoc epoch of a ratio-controlled data order.

use serde::{Deserialize, Serialize};

use crate::data::{adv_order, equal_order, reweighing_weights, DataOrder};
use crate::experiments::{
    runner::{finetune_on_order, run_parallel, seeds_for},
    ExperimentError, NamedTable, RunSeeds,
};
use crate::nn::{evaluate, DataSplits, LossConfig, Model, Retention, TrainConfig};
use crate::stats::{quartiles, Quartiles};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Setup {
    Baseline,
    Reweighing,
    EoLoss { lambda: f64 },
}

impl Setup {
    pub fn label(&self) -> String {
        match self {
            Setup::Baseline => "baseline".into(),
            Setup::Reweighing => "reweighing".into(),
            Setup::EoLoss { lambda } => format!("eo_loss(lambda={lambda})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostOrder {
    None,
    Equal,
    Adv,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MitigationCell {
    pub setup: Setup,
    pub post_order: PostOrder,
    pub avg_odds: Quartiles,
    pub f1: Quartiles,
    /// Per-seed (AO, F1) pairs behind the quartiles.
    pub per_seed: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MitigationResult {
    pub seeds: Vec<RunSeeds>,
    pub cells: Vec<MitigationCell>,
}

impl MitigationResult {
    pub fn cell(&self, setup: Setup, post_order: PostOrder) -> &MitigationCell {
        self.cells
            .iter()
            .find(|c| c.setup == setup && c.post_order == post_order)
            .expect("cell in grid")
    }

    pub fn tables(&self) -> Vec<NamedTable> {
        let mut t = NamedTable::new(
            "mitigation",
            &[
                "setup",
                "post_order",
                "ao_q1",
                "ao_median",
                "ao_q3",
                "f1_q1",
                "f1_median",
                "f1_q3",
            ],
        );
        for c in &self.cells {
            t.push(vec![
                match c.setup {
                    Setup::Baseline => 0.0,
                    Setup::Reweighing => 1.0,
                    Setup::EoLoss { .. } => 2.0,
                },
                match c.post_order {
                    PostOrder::None => 0.0,
                    PostOrder::Equal => 1.0,
                    PostOrder::Adv => 2.0,
                },
                c.avg_odds.q1,
                c.avg_odds.median,
                c.avg_odds.q3,
                c.f1.q1,
                c.f1.median,
                c.f1.q3,
            ]);
        }
        vec![t]
    }
}

fn loss_for(setup: Setup, splits: &DataSplits, base: &LossConfig) -> Result<LossConfig, ExperimentError> {
    Ok(match setup {
        Setup::Baseline => base.clone(),
        Setup::Reweighing => LossConfig::WeightedCe {
            weights: reweighing_weights(&splits.train)?,
        },
        Setup::EoLoss { lambda } => LossConfig::CePlusEo { lambda },
    })
}

/// Trains each setup across seeds, then applies zero or one epoch of the
/// selected custom order to the final model before evaluation. The custom
/// orders are common to all cells (seeded by the master seed).
pub fn mitigation_compare(
    splits: &DataSplits,
    base_config: &TrainConfig,
    setups: &[Setup],
    post_orders: &[PostOrder],
    n_seeds: usize,
    master_seed: u64,
) -> Result<MitigationResult, ExperimentError> {
    if n_seeds < 3 {
        return Err(ExperimentError::BadParams(format!(
            "mitigation comparison needs at least 3 seeds, got {n_seeds}"
        )));
    }
    if setups.is_empty() || post_orders.is_empty() {
        return Err(ExperimentError::BadParams(
            "need at least one setup and one post order".into(),
        ));
    }
    let equal = equal_order(&splits.train, base_config.batch_size, master_seed)?;
    let adv = adv_order(&splits.train, base_config.batch_size, master_seed)?;
    let seeds: Vec<RunSeeds> = (0..n_seeds)
        .map(|i| {
            let (w, s) = seeds_for(master_seed, i);
            RunSeeds {
                run_id: i,
                weight_seed: w,
                shuffle_seed: s,
            }
        })
        .collect();

    let mut cells = Vec::with_capacity(setups.len() * post_orders.len());
    for &setup in setups {
        let loss = loss_for(setup, splits, &base_config.loss)?;
        let configs: Vec<TrainConfig> = seeds
            .iter()
            .map(|s| TrainConfig {
                weight_seed: s.weight_seed,
                shuffle_seed: s.shuffle_seed,
                loss: loss.clone(),
                ..base_config.clone()
            })
            .collect();
        let outputs = run_parallel(splits, &configs, Retention::None)?;
        for &post_order in post_orders {
            let order: Option<&DataOrder> = match post_order {
                PostOrder::None => None,
                PostOrder::Equal => Some(&equal),
                PostOrder::Adv => Some(&adv),
            };
            let mut per_seed = Vec::with_capacity(n_seeds);
            for (out, config) in outputs.iter().zip(&configs) {
                let mut model: Model = out.model.clone();
                if let Some(order) = order {
                    finetune_on_order(&mut model, &splits.train, order, config)?;
                }
                let rec = evaluate(&model, &splits.test, config.epochs.max(1))?;
                per_seed.push((rec.avg_odds, rec.f1));
            }
            let aos: Vec<f64> = per_seed.iter().map(|p| p.0).collect();
            let f1s: Vec<f64> = per_seed.iter().map(|p| p.1).collect();
            cells.push(MitigationCell {
                setup,
                post_order,
                avg_odds: quartiles(&aos)?,
                f1: quartiles(&f1s)?,
                per_seed,
            });
        }
    }
    Ok(MitigationResult { seeds, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{split, synth_generate, SynthSpec};

    fn tiny_splits() -> DataSplits {
        let ds = synth_generate(&SynthSpec {
            n: 600,
            dims: 4,
            seed: 30,
            ..SynthSpec::default()
        })
        .unwrap();
        let (train, val, test) = split(&ds, [0.7, 0.1, 0.2], 0).unwrap();
        DataSplits { train, val, test }
    }

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            hidden_sizes: vec![8],
            batch_size: 32,
            epochs: 4,
            learning_rate: 0.02,
            record_window: (2, 4),
            ..TrainConfig::default()
        }
    }

    #[test]
    fn none_cells_match_plain_run_finals() {
        let splits = tiny_splits();
        let config = tiny_config();
        let result = mitigation_compare(
            &splits,
            &config,
            &[Setup::Baseline],
            &[PostOrder::None],
            3,
            50,
        )
        .unwrap();
        let cell = result.cell(Setup::Baseline, PostOrder::None);
        // re-run the same seeds directly and compare finals
        let configs: Vec<TrainConfig> = (0..3)
            .map(|i| {
                let (w, s) = seeds_for(50, i);
                TrainConfig {
                    weight_seed: w,
                    shuffle_seed: s,
                    ..config.clone()
                }
            })
            .collect();
        let outs = run_parallel(&splits, &configs, Retention::None).unwrap();
        for (out, &(ao, f1)) in outs.iter().zip(&cell.per_seed) {
            let rec = out.trajectory.final_record().unwrap();
            assert_eq!(rec.avg_odds, ao);
            assert_eq!(rec.f1, f1);
        }
    }

    #[test]
    fn grid_shape_and_determinism() {
        let splits = tiny_splits();
        let config = tiny_config();
        let setups = [Setup::Reweighing, Setup::EoLoss { lambda: 1.0 }];
        let posts = [PostOrder::None, PostOrder::Equal, PostOrder::Adv];
        let a = mitigation_compare(&splits, &config, &setups, &posts, 3, 50).unwrap();
        let b = mitigation_compare(&splits, &config, &setups, &posts, 3, 50).unwrap();
        assert_eq!(a.cells.len(), 6);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert!(
            mitigation_compare(&splits, &config, &setups, &posts, 2, 50).is_err()
        );
    }
}

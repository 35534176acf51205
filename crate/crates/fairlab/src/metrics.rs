//! Group confusion accounting and the fairness/performance metrics.
//!
//! All metrics are reported in percent. Undefined metrics raise errors
//! rather than returning sentinels; callers decide whether to skip or abort.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Canonical subgroup order: (a, y) = (0,1), (1,1), (1,0), (0,0).
/// With a=0 read as the minority-positive sensitive group in the synthetic
/// defaults, this is (F,+), (M,+), (M,-), (F,-).
pub const SUBGROUPS: [(u8, u8); 4] = [(0, 1), (1, 1), (1, 0), (0, 0)];

/// Index of row i's subgroup in [`SUBGROUPS`].
pub fn subgroup_index(a: u8, y: u8) -> usize {
    match (a, y) {
        (0, 1) => 0,
        (1, 1) => 1,
        (1, 0) => 2,
        (0, 0) => 3,
        _ => unreachable!("binary attributes only"),
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("length mismatch: preds {preds}, labels {labels}, sensitive {sensitive}")]
    LengthMismatch {
        preds: usize,
        labels: usize,
        sensitive: usize,
    },
    #[error("empty input")]
    Empty,
    #[error("undefined metric {metric}: {reason}")]
    Undefined {
        metric: &'static str,
        reason: String,
    },
}

/// Per-group confusion counts for a binary sensitive attribute.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GroupConfusion {
    pub tp: [u64; 2],
    pub fp: [u64; 2],
    pub tn: [u64; 2],
    pub fn_: [u64; 2],
}

impl GroupConfusion {
    pub fn positives(&self, a: usize) -> u64 {
        self.tp[a] + self.fn_[a]
    }

    pub fn negatives(&self, a: usize) -> u64 {
        self.fp[a] + self.tn[a]
    }

    pub fn predicted_positives(&self, a: usize) -> u64 {
        self.tp[a] + self.fp[a]
    }

    pub fn total(&self) -> u64 {
        (0..2).map(|a| self.positives(a) + self.negatives(a)).sum()
    }

    fn tpr(&self, a: usize) -> f64 {
        self.tp[a] as f64 / self.positives(a) as f64
    }

    fn fpr(&self, a: usize) -> f64 {
        self.fp[a] as f64 / self.negatives(a) as f64
    }
}

pub fn confusion(preds: &[u8], labels: &[u8], sensitive: &[u8]) -> Result<GroupConfusion, MetricError> {
    if preds.len() != labels.len() || preds.len() != sensitive.len() {
        return Err(MetricError::LengthMismatch {
            preds: preds.len(),
            labels: labels.len(),
            sensitive: sensitive.len(),
        });
    }
    if preds.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut conf = GroupConfusion::default();
    for ((&p, &y), &a) in preds.iter().zip(labels).zip(sensitive) {
        let a = a as usize;
        match (y, p) {
            (1, 1) => conf.tp[a] += 1,
            (1, 0) => conf.fn_[a] += 1,
            (0, 1) => conf.fp[a] += 1,
            (0, 0) => conf.tn[a] += 1,
            _ => unreachable!("binary labels/preds only"),
        }
    }
    Ok(conf)
}

/// F1 pooled over both groups: 100 * 2TP / (P + PP).
pub fn f1(conf: &GroupConfusion) -> Result<f64, MetricError> {
    let tp = (conf.tp[0] + conf.tp[1]) as f64;
    let p = (conf.positives(0) + conf.positives(1)) as f64;
    let pp = (conf.predicted_positives(0) + conf.predicted_positives(1)) as f64;
    if p + pp == 0.0 {
        return Err(MetricError::Undefined {
            metric: "f1",
            reason: "no positives and no predicted positives".into(),
        });
    }
    Ok(100.0 * 2.0 * tp / (p + pp))
}

/// Average odds: 100 * (|TPR0-TPR1| + |FPR0-FPR1|) / 2.
pub fn average_odds(conf: &GroupConfusion) -> Result<f64, MetricError> {
    for a in 0..2 {
        if conf.positives(a) == 0 || conf.negatives(a) == 0 {
            return Err(MetricError::Undefined {
                metric: "average_odds",
                reason: format!("group a={a} is missing a label value"),
            });
        }
    }
    let d_tpr = (conf.tpr(0) - conf.tpr(1)).abs();
    let d_fpr = (conf.fpr(0) - conf.fpr(1)).abs();
    Ok(100.0 * (d_tpr + d_fpr) / 2.0)
}

/// Equal opportunity: 100 * |TPR0 - TPR1|.
pub fn equal_opportunity(conf: &GroupConfusion) -> Result<f64, MetricError> {
    for a in 0..2 {
        if conf.positives(a) == 0 {
            return Err(MetricError::Undefined {
                metric: "equal_opportunity",
                reason: format!("group a={a} has no positives"),
            });
        }
    }
    Ok(100.0 * (conf.tpr(0) - conf.tpr(1)).abs())
}

/// Demographic parity on predicted-positive counts:
/// 100 * (1 - min(c0/c1, c1/c0)).
pub fn demographic_parity(conf: &GroupConfusion) -> Result<f64, MetricError> {
    let c0 = conf.predicted_positives(0) as f64;
    let c1 = conf.predicted_positives(1) as f64;
    if c0 == 0.0 || c1 == 0.0 {
        return Err(MetricError::Undefined {
            metric: "demographic_parity",
            reason: "a group has no predicted positives".into(),
        });
    }
    Ok(100.0 * (1.0 - (c0 / c1).min(c1 / c0)))
}

/// Accuracy per (a, y) subgroup in [`SUBGROUPS`] order.
pub fn subgroup_accuracy(
    preds: &[u8],
    labels: &[u8],
    sensitive: &[u8],
) -> Result<[f64; 4], MetricError> {
    if preds.len() != labels.len() || preds.len() != sensitive.len() {
        return Err(MetricError::LengthMismatch {
            preds: preds.len(),
            labels: labels.len(),
            sensitive: sensitive.len(),
        });
    }
    let mut correct = [0u64; 4];
    let mut total = [0u64; 4];
    for ((&p, &y), &a) in preds.iter().zip(labels).zip(sensitive) {
        let g = subgroup_index(a, y);
        total[g] += 1;
        if p == y {
            correct[g] += 1;
        }
    }
    let mut out = [0.0; 4];
    for g in 0..4 {
        if total[g] == 0 {
            return Err(MetricError::Undefined {
                metric: "subgroup_accuracy",
                reason: format!("subgroup (a={}, y={}) is empty", SUBGROUPS[g].0, SUBGROUPS[g].1),
            });
        }
        out[g] = 100.0 * correct[g] as f64 / total[g] as f64;
    }
    Ok(out)
}

pub fn overall_accuracy(preds: &[u8], labels: &[u8]) -> Result<f64, MetricError> {
    if preds.is_empty() {
        return Err(MetricError::Empty);
    }
    let correct = preds.iter().zip(labels).filter(|(p, y)| p == y).count();
    Ok(100.0 * correct as f64 / preds.len() as f64)
}

/// All metrics for one epoch's predictions, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub epoch: usize,
    pub f1: f64,
    pub avg_odds: f64,
    pub eopp: f64,
    pub dp: f64,
    pub accuracy: f64,
    /// Keyed by [`SUBGROUPS`] order.
    pub subgroup_acc: [f64; 4],
}

impl MetricRecord {
    pub fn compute(
        epoch: usize,
        preds: &[u8],
        labels: &[u8],
        sensitive: &[u8],
    ) -> Result<Self, MetricError> {
        let conf = confusion(preds, labels, sensitive)?;
        Ok(Self {
            epoch,
            f1: f1(&conf)?,
            avg_odds: average_odds(&conf)?,
            eopp: equal_opportunity(&conf)?,
            dp: demographic_parity(&conf)?,
            accuracy: overall_accuracy(preds, labels)?,
            subgroup_acc: subgroup_accuracy(preds, labels, sensitive)?,
        })
    }
}

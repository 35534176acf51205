//! Cross-entropy loss with optional per-sample weights and an optional
//! differentiable equalized-odds penalty, plus its exact logit gradients.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::nn::NnError;

/// Loss selection carried by a TrainConfig. `WeightedCe` holds one weight per
/// training row; batches index into it through the data order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossConfig {
    PlainCe,
    WeightedCe { weights: Vec<f64> },
    CePlusEo { lambda: f64 },
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig::PlainCe
    }
}

/// Equalized-odds penalty term: lambda/2 * (|soft-TPR gap| + |soft-FPR gap|)
/// over the batch, where soft rates are mean class-1 probabilities per
/// (label, group) cell. A cell absent from the batch drops its gap term.
#[derive(Debug, Clone, Copy)]
pub struct EoTerm<'a> {
    pub groups: &'a [u8],
    pub lambda: f64,
}

struct SoftRates {
    /// Sum and count of p1 per (y, a) cell: index [y][a].
    sum: [[f64; 2]; 2],
    count: [[usize; 2]; 2],
}

impl SoftRates {
    fn gather(probs1: &[f64], labels: &[u8], groups: &[u8]) -> Self {
        let mut rates = SoftRates {
            sum: [[0.0; 2]; 2],
            count: [[0; 2]; 2],
        };
        for ((&p, &y), &a) in probs1.iter().zip(labels).zip(groups) {
            rates.sum[y as usize][a as usize] += p;
            rates.count[y as usize][a as usize] += 1;
        }
        rates
    }

    /// (gap, sign) for the given label value; None when a cell is absent.
    fn gap(&self, y: usize) -> Option<(f64, f64)> {
        if self.count[y][0] == 0 || self.count[y][1] == 0 {
            return None;
        }
        let r0 = self.sum[y][0] / self.count[y][0] as f64;
        let r1 = self.sum[y][1] / self.count[y][1] as f64;
        let diff = r0 - r1;
        Some((diff.abs(), if diff > 0.0 { 1.0 } else if diff < 0.0 { -1.0 } else { 0.0 }))
    }
}

fn softmax_probs(logits: &Array2<f64>) -> Array2<f64> {
    let mut probs = logits.clone();
    for mut row in probs.rows_mut() {
        let m = row[0].max(row[1]);
        let e0 = (row[0] - m).exp();
        let e1 = (row[1] - m).exp();
        let sum = e0 + e1;
        row[0] = e0 / sum;
        row[1] = e1 / sum;
    }
    probs
}

fn check_lengths(
    logits: &Array2<f64>,
    labels: &[u8],
    sample_weights: Option<&[f64]>,
    eo_term: Option<&EoTerm>,
) -> Result<(), NnError> {
    let b = logits.nrows();
    if b == 0 {
        return Err(NnError::EmptyBatch);
    }
    let ok = labels.len() == b
        && sample_weights.is_none_or(|w| w.len() == b)
        && eo_term.is_none_or(|e| e.groups.len() == b);
    if !ok {
        return Err(NnError::BadConfig(format!(
            "batch length mismatch: logits {b}, labels {}",
            labels.len()
        )));
    }
    Ok(())
}

/// Scalar loss: mean over the batch of w_i * CE(softmax(logits_i), y_i),
/// plus the EO penalty when present.
pub fn loss(
    logits: &Array2<f64>,
    labels: &[u8],
    sample_weights: Option<&[f64]>,
    eo_term: Option<EoTerm>,
) -> Result<f64, NnError> {
    Ok(loss_and_logit_grad(logits, labels, sample_weights, eo_term)?.0)
}

/// Loss value together with dL/dlogits (the starting point for backward).
pub fn loss_and_logit_grad(
    logits: &Array2<f64>,
    labels: &[u8],
    sample_weights: Option<&[f64]>,
    eo_term: Option<EoTerm>,
) -> Result<(f64, Array2<f64>), NnError> {
    check_lengths(logits, labels, sample_weights, eo_term.as_ref())?;
    let b = logits.nrows();
    let bf = b as f64;
    let probs = softmax_probs(logits);

    let mut total = 0.0;
    let mut dlogits = Array2::zeros((b, 2));
    for i in 0..b {
        let y = labels[i] as usize;
        let w = sample_weights.map_or(1.0, |w| w[i]);
        // clamp keeps ln finite for saturated wrong-class probabilities
        total += -w * probs[(i, y)].max(1e-300).ln();
        for k in 0..2 {
            let target = f64::from(k == y);
            dlogits[(i, k)] = w / bf * (probs[(i, k)] - target);
        }
    }
    let mut value = total / bf;

    if let Some(eo) = eo_term {
        let probs1: Vec<f64> = (0..b).map(|i| probs[(i, 1)]).collect();
        let rates = SoftRates::gather(&probs1, labels, eo.groups);
        let half_lambda = eo.lambda / 2.0;
        for y in 0..2 {
            let Some((gap, sign)) = rates.gap(y) else {
                continue;
            };
            value += half_lambda * gap;
            // d gap / d p1_i = sign * (+1/n_{y,0}) for a=0, (-1/n_{y,1}) for a=1
            for i in 0..b {
                if labels[i] as usize != y {
                    continue;
                }
                let a = eo.groups[i] as usize;
                let dir = if a == 0 { 1.0 } else { -1.0 };
                let coeff = half_lambda * sign * dir / rates.count[y][a] as f64;
                // dp1/dz = p1*p0 * (dz1 - dz0)
                let pp = probs[(i, 1)] * probs[(i, 0)];
                dlogits[(i, 0)] -= coeff * pp;
                dlogits[(i, 1)] += coeff * pp;
            }
        }
    }
    Ok((value, dlogits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn perfect_fit_zero_ce() {
        let logits = array![[50.0, -50.0], [-50.0, 50.0]];
        let labels = [0u8, 1];
        let v = loss(&logits, &labels, None, None).unwrap();
        assert!(v < 1e-12, "loss {v}");
    }

    #[test]
    fn uniform_logits_ln2() {
        let logits = array![[0.0, 0.0], [3.0, 3.0], [-1.0, -1.0]];
        let labels = [0u8, 1, 0];
        let v = loss(&logits, &labels, None, None).unwrap();
        assert!((v - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn weighted_ce_scales_linearly() {
        let logits = array![[0.4, -0.2], [0.1, 0.9]];
        let labels = [1u8, 0];
        let base = loss(&logits, &labels, None, None).unwrap();
        let weights = [3.0, 3.0];
        let scaled = loss(&logits, &labels, Some(&weights), None).unwrap();
        assert!((scaled - 3.0 * base).abs() < 1e-12);
        // doubled weights double the CE gradients
        let (_, g1) = loss_and_logit_grad(&logits, &labels, Some(&[1.0, 2.0]), None).unwrap();
        let (_, g2) = loss_and_logit_grad(&logits, &labels, Some(&[2.0, 4.0]), None).unwrap();
        for (a, b) in g1.iter().zip(g2.iter()) {
            assert!((2.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn eo_penalty_hand_case() {
        // soft-TPR gap 0.2 and soft-FPR gap 0.1 at lambda 0.5 -> penalty 0.075.
        // Build logits whose p1 values realize those gaps exactly.
        let p_to_logit = |p: f64| (p / (1.0 - p)).ln(); // z1 - z0 with z0 = 0
        // y=1: a=0 has p1=0.9, a=1 has p1=0.7; y=0: a=0 p1=0.3, a=1 p1=0.2
        let logits = array![
            [0.0, p_to_logit(0.9)],
            [0.0, p_to_logit(0.7)],
            [0.0, p_to_logit(0.3)],
            [0.0, p_to_logit(0.2)]
        ];
        let labels = [1u8, 1, 0, 0];
        let groups = [0u8, 1, 0, 1];
        let without = loss(&logits, &labels, None, None).unwrap();
        let with = loss(
            &logits,
            &labels,
            None,
            Some(EoTerm {
                groups: &groups,
                lambda: 0.5,
            }),
        )
        .unwrap();
        assert!((with - without - 0.075).abs() < 1e-12);
    }

    #[test]
    fn eo_penalty_missing_cell_drops_term() {
        // no y=0 rows at all: FPR gap term absent
        let logits = array![[0.0, 1.0], [0.0, -1.0]];
        let labels = [1u8, 1];
        let groups = [0u8, 1];
        let base = loss(&logits, &labels, None, None).unwrap();
        let with = loss(
            &logits,
            &labels,
            None,
            Some(EoTerm {
                groups: &groups,
                lambda: 2.0,
            }),
        )
        .unwrap();
        let p = |z: f64| 1.0 / (1.0 + (-z as f64).exp());
        let expected_gap = (p(1.0) - p(-1.0)).abs();
        assert!((with - base - expected_gap).abs() < 1e-12);
    }

    #[test]
    fn empty_batch_rejected() {
        let logits = Array2::<f64>::zeros((0, 2));
        assert!(matches!(
            loss(&logits, &[], None, None),
            Err(NnError::EmptyBatch)
        ));
    }
}

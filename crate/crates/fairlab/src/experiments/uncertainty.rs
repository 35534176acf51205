//! Per-subgroup profile of MC-dropout prediction uncertainty.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::experiments::{ExperimentError, NamedTable};
use crate::nn::{mc_dropout_uncertainty, Model};
use crate::stats::ecdf;

/// Per-subgroup distributions of per-example prediction standard deviation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UncertaintyProfile {
    /// Sorted stds per canonical subgroup.
    pub subgroup_stds: [Vec<f64>; 4],
    /// ECDF point sets per subgroup.
    pub ecdfs: [Vec<(f64, f64)>; 4],
}

impl UncertaintyProfile {
    /// Linear-interpolation percentile (q in [0,1]) within one subgroup.
    pub fn percentile(&self, subgroup: usize, q: f64) -> f64 {
        let v = &self.subgroup_stds[subgroup];
        let h = q * (v.len() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    }

    pub fn tables(&self) -> Vec<NamedTable> {
        let mut t = NamedTable::new("uncertainty_ecdf", &["subgroup", "std", "cdf"]);
        for (g, points) in self.ecdfs.iter().enumerate() {
            for &(v, f) in points {
                t.push(vec![g as f64, v, f]);
            }
        }
        vec![t]
    }
}

/// Runs MC-dropout on the eval set and groups the per-example stds by
/// subgroup.
pub fn uncertainty_profile(
    model: &Model,
    eval: &Dataset,
    passes: usize,
    dropout_rate: f64,
    seed: u64,
) -> Result<UncertaintyProfile, ExperimentError> {
    let stds = mc_dropout_uncertainty(model, &eval.features, passes, dropout_rate, seed)?;
    let mut subgroup_stds: [Vec<f64>; 4] = Default::default();
    for (i, &s) in stds.iter().enumerate() {
        subgroup_stds[eval.subgroup_of(i)].push(s);
    }
    for (g, v) in subgroup_stds.iter_mut().enumerate() {
        if v.is_empty() {
            return Err(ExperimentError::BadParams(format!(
                "empty subgroup {g} in eval set"
            )));
        }
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    let ecdfs = [
        ecdf(&subgroup_stds[0]),
        ecdf(&subgroup_stds[1]),
        ecdf(&subgroup_stds[2]),
        ecdf(&subgroup_stds[3]),
    ];
    Ok(UncertaintyProfile {
        subgroup_stds,
        ecdfs,
    })
}

//! Single-run proxy: does one run's within-window fairness distribution
//! stand in for the across-runs distribution?

use serde::{Deserialize, Serialize};

use crate::experiments::{ExperimentError, NamedTable};
use crate::stats::{ecdf, ks_two_sample};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProxyResult {
    pub multi_run_finals: Vec<f64>,
    pub single_run_window: Vec<f64>,
    pub multi_ecdf: Vec<(f64, f64)>,
    pub window_ecdf: Vec<(f64, f64)>,
    pub ks_d: f64,
    pub p_value: f64,
}

impl ProxyResult {
    pub fn tables(&self) -> Vec<NamedTable> {
        let mut dist = NamedTable::new("distributions", &["sample", "value", "cdf"]);
        for &(v, f) in &self.multi_ecdf {
            dist.push(vec![0.0, v, f]);
        }
        for &(v, f) in &self.window_ecdf {
            dist.push(vec![1.0, v, f]);
        }
        let mut ks = NamedTable::new("ks", &["d", "p_value"]);
        ks.push(vec![self.ks_d, self.p_value]);
        vec![dist, ks]
    }
}

/// KS comparison of final-epoch values across runs against one run's values
/// over its record window.
pub fn single_run_proxy(
    multi_run_finals: &[f64],
    single_run_window: &[f64],
) -> Result<ProxyResult, ExperimentError> {
    if multi_run_finals.len() < 5 || single_run_window.len() < 5 {
        return Err(ExperimentError::BadParams(format!(
            "proxy comparison needs at least 5 values per sample, got {} and {}",
            multi_run_finals.len(),
            single_run_window.len()
        )));
    }
    let (ks_d, p_value) = ks_two_sample(multi_run_finals, single_run_window)?;
    Ok(ProxyResult {
        multi_run_finals: multi_run_finals.to_vec(),
        single_run_window: single_run_window.to_vec(),
        multi_ecdf: ecdf(multi_run_finals),
        window_ecdf: ecdf(single_run_window),
        ks_d,
        p_value,
    })
}

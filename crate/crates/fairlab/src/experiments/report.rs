//! Generic experiment report: config echo, seeds, and named tables whose
//! every scalar traces back to (run_id, epoch) provenance columns.

use serde::{Deserialize, Serialize};

use crate::stats::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub run_id: usize,
    pub weight_seed: u64,
    pub shuffle_seed: u64,
}

/// A named column table of reals; the unit every experiment reports in and
/// the CLI serializes to long-format CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl NamedTable {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Column values by name; panics on unknown name (programmer error).
    pub fn column(&self, name: &str) -> Vec<f64> {
        let idx = self
            .columns
            .iter()
            .position(|c| c == name)
            .unwrap_or_else(|| panic!("no column '{name}' in table '{}'", self.name));
        self.rows.iter().map(|r| r[idx]).collect()
    }
}

/// Everything a run of one experiment produced. Identical master seeds give
/// byte-identical serialized reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub master_seed: u64,
    pub config: serde_json::Value,
    pub seeds: Vec<RunSeeds>,
    pub tables: Vec<NamedTable>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trajectories: Vec<Trajectory>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, master_seed: u64, config: serde_json::Value) -> Self {
        Self {
            experiment: experiment.to_string(),
            master_seed,
            config,
            seeds: Vec::new(),
            tables: Vec::new(),
            trajectories: Vec::new(),
        }
    }

    pub fn table(&self, name: &str) -> Option<&NamedTable> {
        self.tables.iter().find(|t| t.name == name)
    }
}

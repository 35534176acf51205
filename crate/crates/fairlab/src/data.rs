//! Tabular datasets with binary label and binary sensitive attribute:
//! CSV ingestion, synthetic generation, deterministic splitting, reference
//! and per-epoch data orders, the ratio-controlled order builder, and
//! reweighing weights.

use std::path::Path;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{subgroup_index, SUBGROUPS};
use crate::rng::{Prng, ORDER_BUILD_STREAM, SHUFFLE_STREAM, SPLIT_STREAM, SYNTH_STREAM};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv parse error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column '{name}'")]
    MissingColumn { name: String },
    #[error("non-binary value '{value}' in column '{column}' at data row {row}")]
    NonBinary {
        row: usize,
        column: String,
        value: String,
    },
    #[error("non-numeric feature cell '{value}' in column '{column}' at data row {row}")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("empty dataset: {0}")]
    Empty(String),
    #[error("synthetic spec invalid: {0}")]
    BadSpec(String),
    #[error("split ratios invalid: {0}")]
    BadRatios(String),
    #[error("split part '{part}' is empty")]
    EmptySplitPart { part: &'static str },
    #[error("subgroup (a={a}, y={y}) is empty")]
    EmptySubgroup { a: u8, y: u8 },
    #[error("ratio order spec invalid: {0}")]
    BadRatioOrder(String),
}

/// Tabular binary-classification data with a binary sensitive attribute.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Vec<u8>,
    pub sensitive: Vec<u8>,
    pub columns: Vec<String>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Counts per subgroup in [`SUBGROUPS`] order.
    pub fn subgroup_counts(&self) -> [usize; 4] {
        let mut counts = [0usize; 4];
        for (&y, &a) in self.labels.iter().zip(&self.sensitive) {
            counts[subgroup_index(a, y)] += 1;
        }
        counts
    }

    pub fn subgroup_of(&self, i: usize) -> usize {
        subgroup_index(self.sensitive[i], self.labels[i])
    }

    /// New dataset with the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            sensitive: indices.iter().map(|&i| self.sensitive[i]).collect(),
            columns: self.columns.clone(),
        }
    }
}

fn parse_binary(field: &str, row: usize, column: &str) -> Result<u8, DataError> {
    match field.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(DataError::NonBinary {
            row,
            column: column.to_string(),
            value: other.to_string(),
        }),
    }
}

/// Loads a comma-separated file (first row header, UTF-8). The named label
/// and sensitive columns must hold {0,1}; every remaining column becomes a
/// numeric feature. Row order is preserved.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &str,
    sensitive_column: &str,
) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => DataError::Io {
            path: path.display().to_string(),
            source: std::io::Error::other(e.to_string()),
        },
        _ => DataError::Csv(e),
    })?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| DataError::MissingColumn {
            name: label_column.to_string(),
        })?;
    let sens_idx = headers
        .iter()
        .position(|h| h == sensitive_column)
        .ok_or_else(|| DataError::MissingColumn {
            name: sensitive_column.to_string(),
        })?;
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&i| i != label_idx && i != sens_idx)
        .collect();

    let mut rows: Vec<f64> = Vec::new();
    let mut labels = Vec::new();
    let mut sensitive = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 1;
        labels.push(parse_binary(&record[label_idx], row, &headers[label_idx])?);
        sensitive.push(parse_binary(&record[sens_idx], row, &headers[sens_idx])?);
        for &c in &feature_cols {
            let field = record[c].trim();
            let value: f64 = field.parse().map_err(|_| DataError::NonNumeric {
                row,
                column: headers[c].clone(),
                value: field.to_string(),
            })?;
            if !value.is_finite() {
                return Err(DataError::NonNumeric {
                    row,
                    column: headers[c].clone(),
                    value: field.to_string(),
                });
            }
            rows.push(value);
        }
    }
    if labels.is_empty() {
        return Err(DataError::Empty(format!(
            "{} contains a header but no data rows",
            path.display()
        )));
    }
    let n = labels.len();
    let d = feature_cols.len();
    Ok(Dataset {
        features: Array2::from_shape_vec((n, d), rows).expect("row-major shape"),
        labels,
        sensitive,
        columns: feature_cols.iter().map(|&c| headers[c].clone()).collect(),
    })
}

/// Writes a dataset in the same CSV format `load_csv` reads (feature columns
/// first, then `label` and `sensitive`). Values round-trip exactly.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    })?;
    let mut header = dataset.columns.clone();
    header.push("label".into());
    header.push("sensitive".into());
    writer.write_record(&header)?;
    for i in 0..dataset.n() {
        let mut record: Vec<String> = dataset
            .features
            .row(i)
            .iter()
            .map(|v| format!("{v}"))
            .collect();
        record.push(dataset.labels[i].to_string());
        record.push(dataset.sensitive[i].to_string());
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|e| DataError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(())
}

/// Synthetic dataset spec. Defaults mirror an income-style imbalance where
/// positives of group a=0 are the under-represented minority.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub n: usize,
    pub dims: usize,
    /// Subgroup proportions in [`SUBGROUPS`] order: (F,+), (M,+), (M,-), (F,-).
    pub proportions: [f64; 4],
    pub label_separation: f64,
    pub group_shift: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n: 20_000,
            dims: 10,
            proportions: [0.1651, 0.2455, 0.2816, 0.3078],
            label_separation: 2.0,
            group_shift: 0.5,
            noise: 1.0,
            seed: 0,
        }
    }
}

/// Largest-remainder apportionment of `total` over `weights`; remainder goes
/// to the largest fractional parts, ties broken by lower index.
pub fn largest_remainder(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let targets: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut counts: Vec<usize> = targets.iter().map(|t| t.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&i, &j| {
        let fi = targets[i] - targets[i].floor();
        let fj = targets[j] - targets[j].floor();
        fj.partial_cmp(&fi).unwrap().then(i.cmp(&j))
    });
    for k in 0..(total - assigned) {
        counts[order[k % weights.len()]] += 1;
    }
    counts
}

/// Generates a Gaussian-blob dataset: subgroup (a, y) has mean
/// `separation * y * e1 + shift * a * e2` with isotropic noise, apportioned
/// by largest remainder and order-shuffled with the spec seed.
pub fn synth_generate(spec: &SynthSpec) -> Result<Dataset, DataError> {
    if spec.n < 4 {
        return Err(DataError::BadSpec(format!(
            "n = {} cannot represent all four subgroups",
            spec.n
        )));
    }
    if spec.dims < 2 {
        return Err(DataError::BadSpec("dims must be at least 2".into()));
    }
    let psum: f64 = spec.proportions.iter().sum();
    if (psum - 1.0).abs() > 1e-9 {
        return Err(DataError::BadSpec(format!(
            "proportions sum to {psum}, expected 1"
        )));
    }
    if spec.proportions.iter().any(|&p| p < 0.0) {
        return Err(DataError::BadSpec("proportions must be nonnegative".into()));
    }
    let counts = largest_remainder(spec.n, &spec.proportions);
    if counts.iter().any(|&c| c == 0) {
        return Err(DataError::BadSpec(
            "apportionment leaves a subgroup empty".into(),
        ));
    }

    let mut rng = Prng::from_parts(spec.seed, SYNTH_STREAM);
    let mut features = Array2::zeros((spec.n, spec.dims));
    let mut labels = Vec::with_capacity(spec.n);
    let mut sensitive = Vec::with_capacity(spec.n);
    let mut row = 0;
    for (g, &count) in counts.iter().enumerate() {
        let (a, y) = SUBGROUPS[g];
        for _ in 0..count {
            for d in 0..spec.dims {
                let mut v = spec.noise * rng.next_gaussian();
                if d == 0 {
                    v += spec.label_separation * y as f64;
                } else if d == 1 {
                    v += spec.group_shift * a as f64;
                }
                features[(row, d)] = v;
            }
            labels.push(y);
            sensitive.push(a);
            row += 1;
        }
    }
    let mut order: Vec<usize> = (0..spec.n).collect();
    rng.shuffle(&mut order);
    let ds = Dataset {
        features,
        labels,
        sensitive,
        columns: (0..spec.dims).map(|d| format!("x{d}")).collect(),
    };
    Ok(ds.select(&order))
}

/// One seeded shuffle, then contiguous cuts at largest-remainder boundaries.
/// Computed once per experiment and reused across runs.
pub fn split(
    dataset: &Dataset,
    ratios: [f64; 3],
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset), DataError> {
    if ratios.iter().any(|&r| r <= 0.0) {
        return Err(DataError::BadRatios("all ratios must be positive".into()));
    }
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(DataError::BadRatios(format!("ratios sum to {sum}, expected 1")));
    }
    let n = dataset.n();
    let counts = largest_remainder(n, &ratios);
    let names = ["train", "val", "test"];
    for (i, &c) in counts.iter().enumerate() {
        if c == 0 {
            return Err(DataError::EmptySplitPart { part: names[i] });
        }
    }
    let mut indices: Vec<usize> = (0..n).collect();
    Prng::from_parts(seed, SPLIT_STREAM).shuffle(&mut indices);
    let train = dataset.select(&indices[..counts[0]]);
    let val = dataset.select(&indices[counts[0]..counts[0] + counts[1]]);
    let test = dataset.select(&indices[counts[0] + counts[1]..]);
    Ok((train, val, test))
}

/// A permutation of the training indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataOrder(pub Vec<usize>);

impl DataOrder {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Consecutive batches of `batch_size`, final short batch included.
    pub fn batches(&self, batch_size: usize) -> impl Iterator<Item = &[usize]> {
        self.0.chunks(batch_size)
    }

    pub fn num_batches(&self, batch_size: usize) -> usize {
        self.0.len().div_ceil(batch_size)
    }
}

/// The r_s-seeded base permutation every epoch order is derived from.
pub fn reference_order(n: usize, shuffle_seed: u64) -> DataOrder {
    let mut indices: Vec<usize> = (0..n).collect();
    Prng::from_parts(shuffle_seed, SHUFFLE_STREAM).shuffle(&mut indices);
    DataOrder(indices)
}

/// Per-epoch reshuffle of the reference order, seeded by the epoch number,
/// so the result depends on both r_s (through the reference) and t.
pub fn epoch_order(reference: &DataOrder, epoch: usize) -> DataOrder {
    debug_assert!(epoch >= 1);
    let mut indices = reference.0.clone();
    Prng::from_parts(epoch as u64, SHUFFLE_STREAM).shuffle(&mut indices);
    DataOrder(indices)
}

/// Ratio-controlled order spec: the varied sensitive group's positives to
/// negatives are held at `pos_to_neg` within every suffix batch, all other
/// proportions pinned to the training-set empirical distribution.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RatioSpec {
    pub varied_group: u8,
    pub pos_to_neg: f64,
}

/// Builds the custom data order: ratio-exact batches drawn without
/// replacement until some subgroup pool runs dry form the suffix; every
/// leftover point is shuffled into the prefix. Output is a permutation of
/// all training indices.
pub fn build_ratio_order(
    train: &Dataset,
    spec: &RatioSpec,
    batch_size: usize,
    seed: u64,
) -> Result<DataOrder, DataError> {
    if spec.pos_to_neg <= 0.0 {
        return Err(DataError::BadRatioOrder(format!(
            "pos_to_neg ratio must be positive, got {}",
            spec.pos_to_neg
        )));
    }
    if spec.varied_group > 1 {
        return Err(DataError::BadRatioOrder(format!(
            "varied_group must be 0 or 1, got {}",
            spec.varied_group
        )));
    }
    if batch_size < 4 {
        return Err(DataError::BadRatioOrder(format!(
            "batch_size must be at least 4, got {batch_size}"
        )));
    }
    let n = train.n();
    let counts = train.subgroup_counts();
    for (g, &c) in counts.iter().enumerate() {
        if c == 0 {
            let (a, y) = SUBGROUPS[g];
            return Err(DataError::EmptySubgroup { a, y });
        }
    }

    // Target proportions per subgroup in canonical order.
    let v = spec.varied_group;
    let r = spec.pos_to_neg;
    let mut props = [0.0f64; 4];
    let varied_share = SUBGROUPS
        .iter()
        .enumerate()
        .filter(|(_, &(a, _))| a == v)
        .map(|(g, _)| counts[g] as f64 / n as f64)
        .sum::<f64>();
    for (g, &(a, y)) in SUBGROUPS.iter().enumerate() {
        props[g] = if a == v {
            if y == 1 {
                varied_share * r / (1.0 + r)
            } else {
                varied_share / (1.0 + r)
            }
        } else {
            counts[g] as f64 / n as f64
        };
    }
    let psum: f64 = props.iter().sum();
    for p in &mut props {
        *p /= psum;
    }
    let per_batch = largest_remainder(batch_size, &props);

    let mut rng = Prng::from_parts(seed, ORDER_BUILD_STREAM);
    let mut pools: [Vec<usize>; 4] = Default::default();
    for i in 0..n {
        pools[train.subgroup_of(i)].push(i);
    }
    for pool in &mut pools {
        rng.shuffle(pool);
    }

    let mut remaining = [0usize; 4]; // cursor into each pool
    let mut suffix: Vec<usize> = Vec::new();
    loop {
        let feasible = (0..4).all(|g| pools[g].len() - remaining[g] >= per_batch[g]);
        if !feasible {
            break;
        }
        let start = suffix.len();
        for g in 0..4 {
            let take = per_batch[g];
            suffix.extend_from_slice(&pools[g][remaining[g]..remaining[g] + take]);
            remaining[g] += take;
        }
        rng.shuffle(&mut suffix[start..]);
    }

    let mut prefix: Vec<usize> = Vec::new();
    for g in 0..4 {
        prefix.extend_from_slice(&pools[g][remaining[g]..]);
    }
    rng.shuffle(&mut prefix);
    prefix.extend_from_slice(&suffix);
    Ok(DataOrder(prefix))
}

/// The sensitive group whose positive subgroup is smallest (tie: a=0).
fn minority_positive_group(train: &Dataset) -> u8 {
    let counts = train.subgroup_counts();
    // canonical order: index 0 is (0,1), index 1 is (1,1)
    if counts[1] < counts[0] {
        1
    } else {
        0
    }
}

/// Suffix holds the minority-positive group's positives:negatives at 1:1.
pub fn equal_order(train: &Dataset, batch_size: usize, seed: u64) -> Result<DataOrder, DataError> {
    build_ratio_order(
        train,
        &RatioSpec {
            varied_group: minority_positive_group(train),
            pos_to_neg: 1.0,
        },
        batch_size,
        seed,
    )
}

/// Suffix holds the minority-positive group's positives:negatives at 1:3.
pub fn adv_order(train: &Dataset, batch_size: usize, seed: u64) -> Result<DataOrder, DataError> {
    build_ratio_order(
        train,
        &RatioSpec {
            varied_group: minority_positive_group(train),
            pos_to_neg: 1.0 / 3.0,
        },
        batch_size,
        seed,
    )
}

/// Reweighing weights w(a,y) = N_a * N_y / (N * N_{a,y}) per sample.
pub fn reweighing_weights(train: &Dataset) -> Result<Vec<f64>, DataError> {
    let counts = train.subgroup_counts();
    for (g, &c) in counts.iter().enumerate() {
        if c == 0 {
            let (a, y) = SUBGROUPS[g];
            return Err(DataError::EmptySubgroup { a, y });
        }
    }
    let n = train.n() as f64;
    let mut n_a = [0.0f64; 2];
    let mut n_y = [0.0f64; 2];
    for (g, &(a, y)) in SUBGROUPS.iter().enumerate() {
        n_a[a as usize] += counts[g] as f64;
        n_y[y as usize] += counts[g] as f64;
    }
    let mut w_group = [0.0f64; 4];
    for (g, &(a, y)) in SUBGROUPS.iter().enumerate() {
        w_group[g] = n_a[a as usize] * n_y[y as usize] / (n * counts[g] as f64);
    }
    Ok((0..train.n()).map(|i| w_group[train.subgroup_of(i)]).collect())
}

//! Statistics over metric trajectories: variance across runs/epochs, Pearson
//! correlation, ECDF and two-sample KS test, Pareto fronts and Hausdorff
//! distance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::MetricRecord;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {need} values, got {got}")]
    TooFewValues { need: usize, got: usize },
    #[error("length mismatch: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("undefined correlation: zero variance in {which}")]
    ZeroVariance { which: &'static str },
    #[error("empty sample")]
    EmptySample,
    #[error("window [{t1}, {t2}] outside trajectory epochs")]
    BadWindow { t1: usize, t2: usize },
}

/// Which column of a [`MetricRecord`] a statistic is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    F1,
    AvgOdds,
    Eopp,
    Dp,
    Accuracy,
}

impl MetricKind {
    pub fn of(self, rec: &MetricRecord) -> f64 {
        match self {
            MetricKind::F1 => rec.f1,
            MetricKind::AvgOdds => rec.avg_odds,
            MetricKind::Eopp => rec.eopp,
            MetricKind::Dp => rec.dp,
            MetricKind::Accuracy => rec.accuracy,
        }
    }
}

/// Per-epoch metric records for one training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub run_id: usize,
    pub weight_seed: u64,
    pub shuffle_seed: u64,
    pub records: Vec<MetricRecord>,
}

impl Trajectory {
    /// Metric values over epochs t1..=t2 (1-based, inclusive).
    pub fn window(&self, t1: usize, t2: usize, metric: MetricKind) -> Result<Vec<f64>, StatsError> {
        let ok = self.records.first().is_some_and(|r| r.epoch <= t1)
            && self.records.last().is_some_and(|r| r.epoch >= t2)
            && t1 <= t2;
        if !ok {
            return Err(StatsError::BadWindow { t1, t2 });
        }
        Ok(self
            .records
            .iter()
            .filter(|r| r.epoch >= t1 && r.epoch <= t2)
            .map(|r| metric.of(r))
            .collect())
    }

    pub fn final_record(&self) -> Option<&MetricRecord> {
        self.records.last()
    }
}

/// Population variance (divide by m).
pub fn population_variance(values: &[f64]) -> Result<f64, StatsError> {
    if values.len() < 2 {
        return Err(StatsError::TooFewValues {
            need: 2,
            got: values.len(),
        });
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    Ok(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m)
}

pub fn var_across_runs(final_values: &[f64]) -> Result<f64, StatsError> {
    population_variance(final_values)
}

pub fn var_across_epochs(
    traj: &Trajectory,
    t1: usize,
    t2: usize,
    metric: MetricKind,
) -> Result<f64, StatsError> {
    population_variance(&traj.window(t1, t2, metric)?)
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch { a: x.len(), b: y.len() });
    }
    if x.len() < 2 {
        return Err(StatsError::TooFewValues { need: 2, got: x.len() });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::ZeroVariance { which: "x" });
    }
    if syy == 0.0 {
        return Err(StatsError::ZeroVariance { which: "y" });
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// Mean over all unordered run pairs of the correlation of their
/// metric-vs-epoch vectors on [t1, t2].
pub fn mean_pairwise_pearson(
    trajectories: &[Trajectory],
    metric: MetricKind,
    t1: usize,
    t2: usize,
) -> Result<f64, StatsError> {
    if trajectories.len() < 2 {
        return Err(StatsError::TooFewValues {
            need: 2,
            got: trajectories.len(),
        });
    }
    let windows: Vec<Vec<f64>> = trajectories
        .iter()
        .map(|t| t.window(t1, t2, metric))
        .collect::<Result<_, _>>()?;
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..windows.len() {
        for j in (i + 1)..windows.len() {
            sum += pearson(&windows[i], &windows[j])?;
            pairs += 1;
        }
    }
    Ok(sum / pairs as f64)
}

/// ECDF evaluation points: sorted (value, F(value)) with F right-continuous.
pub fn ecdf(sample: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut points = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        points.push((v, j as f64 / n));
        i = j;
    }
    points
}

/// Two-sample Kolmogorov-Smirnov test: D = sup |ECDF_a - ECDF_b| and the
/// asymptotic p-value with the standard small-sample correction.
pub fn ks_two_sample(sample_a: &[f64], sample_b: &[f64]) -> Result<(f64, f64), StatsError> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut a = sample_a.to_vec();
    let mut b = sample_b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len(), b.len());
    let mut d: f64 = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    while i < na && j < nb {
        let v = a[i].min(b[j]);
        while i < na && a[i] <= v {
            i += 1;
        }
        while j < nb && b[j] <= v {
            j += 1;
        }
        let diff = (i as f64 / na as f64 - j as f64 / nb as f64).abs();
        d = d.max(diff);
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok((d, kolmogorov_tail(lambda)))
}

/// Q(lambda) = 2 * sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2), truncated when
/// a term drops below 1e-12, clamped to (0, 1].
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-12 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(f64::MIN_POSITIVE, 1.0)
}

/// A (fairness, performance) checkpoint; fairness lower-better, performance
/// higher-better, both in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub fairness: f64,
    pub performance: f64,
    pub run_id: usize,
    pub epoch: usize,
}

impl ParetoPoint {
    /// True when `self` dominates `other` under (fairness <=, performance >=)
    /// with at least one strict inequality.
    fn dominates(&self, other: &ParetoPoint) -> bool {
        self.fairness <= other.fairness
            && self.performance >= other.performance
            && (self.fairness < other.fairness || self.performance > other.performance)
    }
}

/// Non-dominated subset; coordinate-duplicates kept once.
pub fn pareto_front(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    let mut front: Vec<ParetoPoint> = Vec::new();
    for p in points {
        if points.iter().any(|q| q.dominates(p)) {
            continue;
        }
        if front
            .iter()
            .any(|q| q.fairness == p.fairness && q.performance == p.performance)
        {
            continue;
        }
        front.push(*p);
    }
    front
}

fn euclid(a: &ParetoPoint, b: &ParetoPoint) -> f64 {
    let dx = a.fairness - b.fairness;
    let dy = a.performance - b.performance;
    (dx * dx + dy * dy).sqrt()
}

/// Hausdorff distance in raw percent coordinates.
pub fn hausdorff(set_a: &[ParetoPoint], set_b: &[ParetoPoint]) -> Result<f64, StatsError> {
    if set_a.is_empty() || set_b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let directed = |xs: &[ParetoPoint], ys: &[ParetoPoint]| {
        xs.iter()
            .map(|x| {
                ys.iter()
                    .map(|y| euclid(x, y))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    Ok(directed(set_a, set_b).max(directed(set_b, set_a)))
}

/// Five-number summary used by experiment tables (linear-interpolation
/// quartiles).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quartiles {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

pub fn quartiles(values: &[f64]) -> Result<Quartiles, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| {
        let h = p * (v.len() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    };
    Ok(Quartiles {
        min: v[0],
        q1: q(0.25),
        median: q(0.5),
        q3: q(0.75),
        max: v[v.len() - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Prng;
    use proptest::prelude::*;

    #[test]
    fn variance_cases() {
        assert_eq!(population_variance(&[3.0, 3.0, 3.0]).unwrap(), 0.0);
        assert_eq!(population_variance(&[0.0, 2.0]).unwrap(), 1.0);
        assert!(population_variance(&[1.0]).is_err());
    }

    #[test]
    fn variance_matches_two_pass_oracle() {
        let mut rng = Prng::from_parts(3, 0);
        let vals: Vec<f64> = (0..50).map(|_| rng.next_uniform() * 10.0).collect();
        let got = population_variance(&vals).unwrap();
        // textbook two-pass
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let expected: f64 =
            vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn pearson_cases() {
        let x = vec![1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
        let x5 = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let y5 = vec![2.0, 1.0, 4.0, 3.0, 5.0];
        assert!((pearson(&x5, &y5).unwrap() - 0.8).abs() < 1e-12);
        assert!(matches!(
            pearson(&[1.0, 1.0], &[1.0, 2.0]),
            Err(StatsError::ZeroVariance { .. })
        ));
    }

    #[test]
    fn ks_cases() {
        let a = vec![1.0, 2.0, 3.0, 4.0];
        let (d, p) = ks_two_sample(&a, &a).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(p, 1.0);
        let (d, _) = ks_two_sample(&[0.0], &[1.0]).unwrap();
        assert_eq!(d, 1.0);
        let b = vec![3.0, 4.0, 5.0, 6.0];
        let (d, p) = ks_two_sample(&a, &b).unwrap();
        assert_eq!(d, 0.5);
        assert!(p > 0.0 && p <= 1.0);
    }

    #[test]
    fn ks_invariant_under_monotone_transform() {
        let mut rng = Prng::from_parts(11, 0);
        let a: Vec<f64> = (0..40).map(|_| rng.next_gaussian()).collect();
        let b: Vec<f64> = (0..30).map(|_| rng.next_gaussian() + 0.5).collect();
        let (d1, _) = ks_two_sample(&a, &b).unwrap();
        let ta: Vec<f64> = a.iter().map(|v| v.exp()).collect();
        let tb: Vec<f64> = b.iter().map(|v| v.exp()).collect();
        let (d2, _) = ks_two_sample(&ta, &tb).unwrap();
        assert!((d1 - d2).abs() < 1e-12);
    }

    #[test]
    fn pareto_cases() {
        let p = |f: f64, perf: f64| ParetoPoint {
            fairness: f,
            performance: perf,
            run_id: 0,
            epoch: 0,
        };
        let single = vec![p(1.0, 90.0)];
        assert_eq!(pareto_front(&single), single);
        let pts = vec![p(1.0, 90.0), p(2.0, 95.0), p(3.0, 80.0)];
        let front = pareto_front(&pts);
        assert_eq!(front, vec![p(1.0, 90.0), p(2.0, 95.0)]);
        let dup = vec![p(1.0, 90.0); 3];
        assert_eq!(pareto_front(&dup).len(), 1);
    }

    #[test]
    fn hausdorff_cases() {
        let p = |f: f64, perf: f64| ParetoPoint {
            fairness: f,
            performance: perf,
            run_id: 0,
            epoch: 0,
        };
        let a = vec![p(0.0, 0.0), p(1.0, 2.0)];
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        let origin = vec![p(0.0, 0.0)];
        let far = vec![p(3.0, 4.0)];
        assert_eq!(hausdorff(&origin, &far).unwrap(), 5.0);
    }

    #[test]
    fn quartile_sanity() {
        let q = quartiles(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(q.median, 3.0);
        assert_eq!(q.min, 1.0);
        assert_eq!(q.max, 5.0);
        assert_eq!(q.q1, 2.0);
        assert_eq!(q.q3, 4.0);
    }

    proptest! {
        #[test]
        fn ecdf_properties(sample in proptest::collection::vec(-1e3..1e3f64, 1..100)) {
            let pts = ecdf(&sample);
            // nondecreasing, ends at 1
            for w in pts.windows(2) {
                prop_assert!(w[0].0 < w[1].0);
                prop_assert!(w[0].1 <= w[1].1);
            }
            prop_assert!((pts.last().unwrap().1 - 1.0).abs() < 1e-12);
        }

        #[test]
        fn pareto_front_is_antichain(
            pts in proptest::collection::vec((0.0..100.0f64, 0.0..100.0f64), 1..60)
        ) {
            let points: Vec<ParetoPoint> = pts
                .iter()
                .map(|&(f, p)| ParetoPoint { fairness: f, performance: p, run_id: 0, epoch: 0 })
                .collect();
            let front = pareto_front(&points);
            for a in &front {
                for b in &front {
                    prop_assert!(!a.dominates(b));
                }
            }
        }

        #[test]
        fn hausdorff_metric_properties(
            a in proptest::collection::vec((0.0..100.0f64, 0.0..100.0f64), 1..12),
            b in proptest::collection::vec((0.0..100.0f64, 0.0..100.0f64), 1..12),
            c in proptest::collection::vec((0.0..100.0f64, 0.0..100.0f64), 1..12),
        ) {
            let mk = |v: &Vec<(f64, f64)>| -> Vec<ParetoPoint> {
                v.iter()
                    .map(|&(f, p)| ParetoPoint { fairness: f, performance: p, run_id: 0, epoch: 0 })
                    .collect()
            };
            let (a, b, c) = (mk(&a), mk(&b), mk(&c));
            let hab = hausdorff(&a, &b).unwrap();
            let hba = hausdorff(&b, &a).unwrap();
            let haa = hausdorff(&a, &a).unwrap();
            let hac = hausdorff(&a, &c).unwrap();
            let hcb = hausdorff(&c, &b).unwrap();
            prop_assert!(haa.abs() < 1e-9);
            prop_assert!((hab - hba).abs() < 1e-9);
            prop_assert!(hab <= hac + hcb + 1e-9);
        }
    }
}

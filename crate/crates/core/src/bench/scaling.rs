use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use serde::Serialize;

use super::{BenchError, BenchRecord, Workload};
use crate::statevec::Precision;

/// Slopes of log2(time) against n accepted as exponential scaling.
pub const CONFORMANT_SLOPE: RangeInclusive<f64> = 0.8..=1.3;

const MIN_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub workload: Workload,
    pub precision: Precision,
    pub workers: usize,
    /// `(n, median wall_ms)` per qubit count.
    pub points: Vec<(usize, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub conformant: bool,
}

impl ScalingFit {
    pub fn series(&self) -> String {
        series_name(self.workload, self.precision, self.workers)
    }
}

pub(crate) fn series_name(workload: Workload, precision: Precision, workers: usize) -> String {
    format!("{workload} {precision} w={workers}")
}

/// Median of a non-empty slice; the mean of the middle pair for even
/// lengths.
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        (v[k - 1] + v[k]) / 2.0
    }
}

/// Least-squares fit of log2(median wall_ms) against n, one fit per
/// (workload, precision, workers) series.
pub fn fit_scaling(records: &[BenchRecord]) -> Result<Vec<ScalingFit>, BenchError> {
    let mut groups: BTreeMap<(Workload, Precision, usize), BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in records {
        groups.entry((r.workload, r.precision, r.workers)).or_default().entry(r.n_qubits).or_default().push(r.wall_ms);
    }
    if groups.is_empty() {
        return Err(BenchError::InsufficientData { series: "(none)".into(), need: MIN_POINTS, got: 0 });
    }
    groups
        .into_iter()
        .map(|((workload, precision, workers), by_n)| {
            if by_n.len() < MIN_POINTS {
                return Err(BenchError::InsufficientData {
                    series: series_name(workload, precision, workers),
                    need: MIN_POINTS,
                    got: by_n.len(),
                });
            }
            let points: Vec<(usize, f64)> = by_n.iter().map(|(&n, ts)| (n, median(ts))).collect();
            let xs: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
            let ys: Vec<f64> = points.iter().map(|p| p.1.max(f64::MIN_POSITIVE).log2()).collect();
            let k = xs.len() as f64;
            let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
            let slope = sxy / sxx;
            Ok(ScalingFit {
                workload,
                precision,
                workers,
                points,
                slope,
                intercept: my - slope * mx,
                conformant: CONFORMANT_SLOPE.contains(&slope),
            })
        })
        .collect()
}

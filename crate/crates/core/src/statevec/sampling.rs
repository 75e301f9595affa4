use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{basis_label, Amplitudes, SimError, StateVector};
use crate::rng::SimRng;

/// Measurement histogram over all qubits. Keys use the display order
/// (qubit 0 leftmost).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsTable {
    pub n_qubits: usize,
    pub total: u64,
    pub counts: BTreeMap<String, u64>,
}

impl CountsTable {
    pub fn new(n_qubits: usize) -> Self {
        CountsTable { n_qubits, total: 0, counts: BTreeMap::new() }
    }

    pub fn add(&mut self, label: String, n: u64) {
        *self.counts.entry(label).or_insert(0) += n;
        self.total += n;
    }

    pub fn get(&self, label: &str) -> u64 {
        self.counts.get(label).copied().unwrap_or(0)
    }

    /// Checks Σ counts = total and key lengths.
    pub fn is_consistent(&self) -> bool {
        self.counts.values().sum::<u64>() == self.total && self.counts.keys().all(|k| k.len() == self.n_qubits)
    }
}

/// |α_i|² for every basis index.
pub fn exact_probabilities(state: &StateVector) -> Vec<f64> {
    match state.amplitudes() {
        Amplitudes::F32(v) => v.iter().map(|z| (z.re as f64).powi(2) + (z.im as f64).powi(2)).collect(),
        Amplitudes::F64(v) => v.iter().map(|z| z.norm_sqr()).collect(),
    }
}

/// Draws `shots` independent outcomes from |α_i|².
///
/// Each shot consumes one `unit_f64` draw `u` and selects the first index
/// whose cumulative probability exceeds `u · Σp`.
pub fn sample_counts(state: &StateVector, shots: u64, rng_seed: u64) -> Result<CountsTable, SimError> {
    if shots == 0 {
        return Err(SimError::NoShots);
    }
    let norm = state.norm_sqr();
    let drift = (norm - 1.0).abs();
    if drift.is_nan() || drift > state.precision().sampling_tolerance() {
        return Err(SimError::UnnormalizedState { norm });
    }
    let mut cdf = exact_probabilities(state);
    let mut acc = 0.0;
    for p in cdf.iter_mut() {
        acc += *p;
        *p = acc;
    }
    let mut rng = SimRng::seed_from_u64(rng_seed);
    let mut hits: BTreeMap<usize, u64> = BTreeMap::new();
    for _ in 0..shots {
        let u = rng.unit_f64() * acc;
        let mut i = cdf.partition_point(|&c| c <= u);
        // u < acc always, but guard against a trailing run of zero-probability entries
        i = i.min(cdf.len() - 1);
        *hits.entry(i).or_insert(0) += 1;
    }
    let mut table = CountsTable::new(state.n_qubits());
    for (i, n) in hits {
        table.add(basis_label(i, state.n_qubits()), n);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::GateKind;
    use crate::statevec::Precision;

    #[test]
    fn deterministic_state() {
        // "01": q1 set, index 2
        let mut s = StateVector::zero(2, Precision::Fp64).unwrap();
        s.apply_1q(GateKind::Rx, 1, std::f64::consts::PI).unwrap();
        let t = sample_counts(&s, 500, 9).unwrap();
        assert_eq!(t.counts.len(), 1);
        assert_eq!(t.get("01"), 500);
        assert!(t.is_consistent());
    }

    #[test]
    fn hadamard_frequency_and_determinism() {
        let mut s = StateVector::zero(1, Precision::Fp64).unwrap();
        s.apply_1q(GateKind::H, 0, 0.0).unwrap();
        let a = sample_counts(&s, 100_000, 42).unwrap();
        let b = sample_counts(&s, 100_000, 42).unwrap();
        assert_eq!(a, b);
        let f = a.get("0") as f64 / 100_000.0;
        assert!((f - 0.5).abs() <= 0.01, "{f}");
        assert_eq!(a.total, 100_000);
    }

    #[test]
    fn rejects_bad_input() {
        let s = StateVector::zero(1, Precision::Fp64).unwrap();
        assert_eq!(sample_counts(&s, 0, 1), Err(SimError::NoShots));
        let s = StateVector::from_amplitudes(vec![num_complex::Complex64::new(0.9, 0.0); 2]).unwrap();
        assert!(matches!(sample_counts(&s, 10, 1), Err(SimError::UnnormalizedState { .. })));
    }

    #[test]
    fn probabilities() {
        let mut s = StateVector::zero(1, Precision::Fp32).unwrap();
        assert_eq!(exact_probabilities(&s), vec![1.0, 0.0]);
        s.apply_1q(GateKind::H, 0, 0.0).unwrap();
        let p = exact_probabilities(&s);
        assert!((p[0] - 0.5).abs() < 1e-7 && (p[1] - 0.5).abs() < 1e-7);
    }
}

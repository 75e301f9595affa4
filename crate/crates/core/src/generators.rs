//! Synthetic workloads: random CX blocks and the QFT.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::ir::{CircType, GateList, GateRecord};
use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("need at least {min} qubits, got {got}")]
    TooFewQubits { got: usize, min: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSpec {
    pub n_qubits: usize,
    pub n_blocks: usize,
    pub seed: u64,
    pub include_measure: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QftSpec {
    pub n_qubits: usize,
    pub reversed: bool,
}

fn draw_pair(rng: &mut SimRng, n: usize) -> (usize, usize) {
    let u = rng.below((n * (n - 1)) as u64) as usize;
    let control = u / (n - 1);
    let t = u % (n - 1);
    (control, if t >= control { t + 1 } else { t })
}

/// `k` ordered (control, target) pairs with control ≠ target, uniform with
/// replacement. Pair `u = below(n(n−1))` maps to control `u / (n−1)` and the
/// `u mod (n−1)`-th remaining qubit as target.
pub fn random_qubit_pairs(n: usize, k: usize, seed: u64) -> Result<Vec<(usize, usize)>, GenError> {
    if n < 2 {
        return Err(GenError::TooFewQubits { got: n, min: 2 });
    }
    let mut rng = SimRng::seed_from_u64(seed);
    Ok((0..k).map(|_| draw_pair(&mut rng, n)).collect())
}

/// Random CX-block circuit. The stream yields all pairs first (exactly
/// [`random_qubit_pairs`] for the same seed), then two angles per block.
pub fn generate_random_gate_list(spec: &RandomSpec) -> Result<GateList, GenError> {
    let n = spec.n_qubits;
    if n < 2 {
        return Err(GenError::TooFewQubits { got: n, min: 2 });
    }
    let mut rng = SimRng::seed_from_u64(spec.seed);
    let pairs: Vec<_> = (0..spec.n_blocks).map(|_| draw_pair(&mut rng, n)).collect();
    let mut gates = Vec::with_capacity(3 * spec.n_blocks + if spec.include_measure { n } else { 0 });
    for (c, t) in pairs {
        let theta1 = TAU * rng.unit_f64();
        let theta2 = TAU * rng.unit_f64();
        gates.push(GateRecord::ry(c, theta1));
        gates.push(GateRecord::rz(t, theta2));
        gates.push(GateRecord::cx(c, t));
    }
    if spec.include_measure {
        gates.extend((0..n).map(GateRecord::measure));
    }
    Ok(GateList::new(CircType::RandomCx, n, gates))
}

/// QFT without the final swap layer: H(i), then CR1(j → i, 2π/2^(j−i+1))
/// for every j > i. With `reversed`, qubit q becomes n−1−q.
pub fn build_qft(spec: &QftSpec) -> Result<GateList, GenError> {
    let n = spec.n_qubits;
    if n < 1 {
        return Err(GenError::TooFewQubits { got: n, min: 1 });
    }
    let q = |i: usize| if spec.reversed { n - 1 - i } else { i };
    let mut gates = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        gates.push(GateRecord::h(q(i)));
        for j in i + 1..n {
            let lambda = TAU / 2f64.powi((j - i + 1) as i32);
            gates.push(GateRecord::cr1(q(j), q(i), lambda));
        }
    }
    Ok(GateList::new(CircType::Qft, n, gates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::GateKind;

    #[test]
    fn pairs_are_valid() {
        assert!(random_qubit_pairs(2, 50, 1).unwrap().iter().all(|&p| p == (0, 1) || p == (1, 0)));
        assert!(random_qubit_pairs(7, 500, 2).unwrap().iter().all(|(c, t)| c != t && *c < 7 && *t < 7));
        assert_eq!(random_qubit_pairs(1, 3, 0), Err(GenError::TooFewQubits { got: 1, min: 2 }));
        assert!(random_qubit_pairs(3, 0, 0).unwrap().is_empty());
    }

    #[test]
    fn block_anatomy() {
        let spec = RandomSpec { n_qubits: 5, n_blocks: 100, seed: 11, include_measure: false };
        let g = generate_random_gate_list(&spec).unwrap();
        assert_eq!(g.gates.len(), 300);
        assert_eq!(g.count(GateKind::Cx), 100);
        let pairs = random_qubit_pairs(5, 100, 11).unwrap();
        for (b, block) in g.gates.chunks(3).enumerate() {
            let (c, t) = pairs[b];
            assert_eq!((block[0].kind, block[0].target), (GateKind::Ry, c));
            assert_eq!((block[1].kind, block[1].target), (GateKind::Rz, t));
            assert_eq!(block[2], GateRecord::cx(c, t));
            assert!((0.0..TAU).contains(&block[0].param));
        }
        assert_eq!(g, generate_random_gate_list(&spec).unwrap());
        let m = generate_random_gate_list(&RandomSpec { include_measure: true, ..spec }).unwrap();
        assert_eq!(m.gates.len(), 305);
        let empty = generate_random_gate_list(&RandomSpec { n_blocks: 0, ..spec }).unwrap();
        assert!(empty.gates.is_empty());
    }

    #[test]
    fn qft_shape() {
        assert_eq!(build_qft(&QftSpec { n_qubits: 1, reversed: false }).unwrap().gates, vec![GateRecord::h(0)]);
        let g = build_qft(&QftSpec { n_qubits: 4, reversed: false }).unwrap();
        assert_eq!(g.gates.len(), 10);
        let last_of_first_row = g.gates[3];
        assert_eq!(last_of_first_row, GateRecord::cr1(3, 0, std::f64::consts::PI / 8.0));
        let r = build_qft(&QftSpec { n_qubits: 4, reversed: true }).unwrap();
        assert_eq!(r.gates[0], GateRecord::h(3));
        assert_eq!(r.gates[3], GateRecord::cr1(0, 3, std::f64::consts::PI / 8.0));
        assert!(build_qft(&QftSpec { n_qubits: 0, reversed: false }).is_err());
    }
}

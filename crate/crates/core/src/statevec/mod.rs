//! Dense state-vector simulator.
//!
//! Qubit `k` occupies bit `k` of the basis index, so its amplitude stride is
//! `2^k`. Bitstrings are printed with qubit 0 leftmost: index 1 on three
//! qubits is `"100"`.

pub mod kernels;
mod sampling;

use num_complex::{Complex, Complex32, Complex64};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{CircuitTensor, GateKind, GateList, GateRecord, IrError};
pub use kernels::Backend;
use kernels::{Mat2, Real};
pub use sampling::{exact_probabilities, sample_counts, CountsTable};

/// Default memory budget for the amplitude array: 16 GiB.
pub const DEFAULT_MEMORY_BUDGET: u64 = 16 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Fp32,
    #[default]
    Fp64,
}

impl Precision {
    /// Bytes per complex amplitude.
    pub fn amplitude_bytes(self) -> u64 {
        match self {
            Precision::Fp32 => 8,
            Precision::Fp64 => 16,
        }
    }

    /// Allowed deviation of Σ|α|² from 1 after any single gate.
    pub fn norm_tolerance(self) -> f64 {
        match self {
            Precision::Fp32 => 1e-6,
            Precision::Fp64 => 1e-12,
        }
    }

    /// Norm check applied before sampling. Rounding drift accumulates over
    /// deep circuits, so this is looser than the per-gate tolerance.
    pub fn sampling_tolerance(self) -> f64 {
        match self {
            Precision::Fp32 => 1e-3,
            Precision::Fp64 => 1e-9,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Precision::Fp32 => "fp32",
            Precision::Fp64 => "fp64",
        }
    }
}

impl std::fmt::Display for Precision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Precision {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fp32" => Ok(Precision::Fp32),
            "fp64" => Ok(Precision::Fp64),
            other => Err(format!("unknown precision {other:?} (expected fp32 or fp64)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("{n_qubits} qubits need {required_bytes} bytes, budget is {budget_bytes}")]
    TooManyQubits { n_qubits: usize, required_bytes: u128, budget_bytes: u64 },
    #[error("a state needs at least one qubit")]
    InvalidQubitCount,
    #[error("qubit {qubit} out of range for {n_qubits} qubits")]
    IndexOutOfRange { qubit: usize, n_qubits: usize },
    #[error("control and target are both qubit {0}")]
    SelfPair(usize),
    #[error("{0} is not a single-qubit unitary")]
    NotSingleQubit(GateKind),
    #[error("measurement at position {position} is followed by further gates")]
    MeasureMidCircuit { position: usize },
    #[error("state norm {norm} deviates from 1")]
    UnnormalizedState { norm: f64 },
    #[error("sampling needs at least one shot")]
    NoShots,
    #[error("amplitude vector length {0} is not a power of two")]
    BadLength(usize),
    #[error(transparent)]
    Ir(#[from] IrError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Amplitudes {
    F32(Vec<Complex32>),
    F64(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Amplitudes,
    backend: Backend,
}

fn check_budget(n_qubits: usize, precision: Precision, budget: u64) -> Result<usize, SimError> {
    if n_qubits == 0 {
        return Err(SimError::InvalidQubitCount);
    }
    let required = if n_qubits >= 120 { u128::MAX } else { (1u128 << n_qubits) * precision.amplitude_bytes() as u128 };
    if required > budget as u128 || n_qubits >= usize::BITS as usize {
        return Err(SimError::TooManyQubits { n_qubits, required_bytes: required, budget_bytes: budget });
    }
    Ok(1usize << n_qubits)
}

impl StateVector {
    /// `|0…0⟩` under the default 16 GiB budget.
    pub fn zero(n_qubits: usize, precision: Precision) -> Result<Self, SimError> {
        Self::zero_with_budget(n_qubits, precision, DEFAULT_MEMORY_BUDGET)
    }

    pub fn zero_with_budget(n_qubits: usize, precision: Precision, budget_bytes: u64) -> Result<Self, SimError> {
        let len = check_budget(n_qubits, precision, budget_bytes)?;
        let amps = match precision {
            Precision::Fp32 => {
                let mut v = vec![Complex32::new(0.0, 0.0); len];
                v[0] = Complex32::new(1.0, 0.0);
                Amplitudes::F32(v)
            }
            Precision::Fp64 => {
                let mut v = vec![Complex64::new(0.0, 0.0); len];
                v[0] = Complex64::new(1.0, 0.0);
                Amplitudes::F64(v)
            }
        };
        Ok(StateVector { n_qubits, amps, backend: Backend::default() })
    }

    /// Wraps an existing fp64 amplitude vector (length must be `2^n`, n ≥ 1).
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, SimError> {
        let n_qubits = qubits_for_len(amps.len())?;
        Ok(StateVector { n_qubits, amps: Amplitudes::F64(amps), backend: Backend::default() })
    }

    pub fn from_amplitudes_f32(amps: Vec<Complex32>) -> Result<Self, SimError> {
        let n_qubits = qubits_for_len(amps.len())?;
        Ok(StateVector { n_qubits, amps: Amplitudes::F32(amps), backend: Backend::default() })
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn set_backend(&mut self, backend: Backend) {
        self.backend = backend;
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn precision(&self) -> Precision {
        match self.amps {
            Amplitudes::F32(_) => Precision::Fp32,
            Amplitudes::F64(_) => Precision::Fp64,
        }
    }

    pub fn amplitudes(&self) -> &Amplitudes {
        &self.amps
    }

    /// Amplitude `i` widened to f64.
    pub fn amplitude(&self, i: usize) -> Complex64 {
        match &self.amps {
            Amplitudes::F32(v) => Complex64::new(v[i].re as f64, v[i].im as f64),
            Amplitudes::F64(v) => v[i],
        }
    }

    /// All amplitudes widened to f64.
    pub fn to_complex64(&self) -> Vec<Complex64> {
        match &self.amps {
            Amplitudes::F32(v) => v.iter().map(|z| Complex64::new(z.re as f64, z.im as f64)).collect(),
            Amplitudes::F64(v) => v.clone(),
        }
    }

    pub fn as_f64_slice(&self) -> Option<&[Complex64]> {
        match &self.amps {
            Amplitudes::F64(v) => Some(v),
            Amplitudes::F32(_) => None,
        }
    }

    pub fn into_f64(self) -> Option<Vec<Complex64>> {
        match self.amps {
            Amplitudes::F64(v) => Some(v),
            Amplitudes::F32(_) => None,
        }
    }

    /// Σ|α|², accumulated in f64.
    pub fn norm_sqr(&self) -> f64 {
        match &self.amps {
            Amplitudes::F32(v) => kernels::norm_sqr(v),
            Amplitudes::F64(v) => kernels::norm_sqr(v),
        }
    }

    /// Display label of basis index `i`, qubit 0 leftmost.
    pub fn basis_label(&self, i: usize) -> String {
        basis_label(i, self.n_qubits)
    }

    fn check_qubit(&self, q: usize) -> Result<(), SimError> {
        if q >= self.n_qubits {
            Err(SimError::IndexOutOfRange { qubit: q, n_qubits: self.n_qubits })
        } else {
            Ok(())
        }
    }

    fn check_pair(&self, control: usize, target: usize) -> Result<(), SimError> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(SimError::SelfPair(control));
        }
        Ok(())
    }

    /// Applies H, RX, RY or RZ to `target`.
    pub fn apply_1q(&mut self, kind: GateKind, target: usize, param: f64) -> Result<(), SimError> {
        self.check_qubit(target)?;
        let backend = self.backend;
        fn go<T: Real>(v: &mut [Complex<T>], kind: GateKind, t: usize, p: f64, b: Backend) -> Result<(), SimError> {
            let m: Mat2<T> = kernels::single_qubit_matrix(kind, p).ok_or(SimError::NotSingleQubit(kind))?;
            kernels::apply_mat(v, t, &m, b);
            Ok(())
        }
        match &mut self.amps {
            Amplitudes::F32(v) => go(v, kind, target, param, backend),
            Amplitudes::F64(v) => go(v, kind, target, param, backend),
        }
    }

    pub fn apply_cx(&mut self, control: usize, target: usize) -> Result<(), SimError> {
        self.check_pair(control, target)?;
        match &mut self.amps {
            Amplitudes::F32(v) => kernels::apply_cx(v, 0, control, target, self.backend),
            Amplitudes::F64(v) => kernels::apply_cx(v, 0, control, target, self.backend),
        }
        Ok(())
    }

    pub fn apply_cr1(&mut self, control: usize, target: usize, lambda: f64) -> Result<(), SimError> {
        self.check_pair(control, target)?;
        match &mut self.amps {
            Amplitudes::F32(v) => kernels::apply_cr1(v, 0, control, target, lambda, self.backend),
            Amplitudes::F64(v) => kernels::apply_cr1(v, 0, control, target, lambda, self.backend),
        }
        Ok(())
    }

    /// Applies one record. MEASURE is a no-op here; sampling happens once on
    /// the final state.
    pub fn apply(&mut self, g: &GateRecord) -> Result<(), SimError> {
        match (g.kind, g.control) {
            (GateKind::Measure, _) => {
                self.check_qubit(g.target)?;
                Ok(())
            }
            (GateKind::Cx, Some(c)) => self.apply_cx(c, g.target),
            (GateKind::Cr1, Some(c)) => self.apply_cr1(c, g.target, g.param),
            (GateKind::Cx | GateKind::Cr1, None) => {
                Err(IrError::Arity { circuit: 0, gate: 0, kind: g.kind, problem: "requires a control qubit" }.into())
            }
            (kind, _) => self.apply_1q(kind, g.target, g.param),
        }
    }
}

fn qubits_for_len(len: usize) -> Result<usize, SimError> {
    if len < 2 || !len.is_power_of_two() {
        return Err(SimError::BadLength(len));
    }
    Ok(len.trailing_zeros() as usize)
}

/// Label of basis index `i` on `n` qubits, qubit 0 leftmost.
pub fn basis_label(i: usize, n: usize) -> String {
    (0..n).map(|k| if (i >> k) & 1 == 1 { '1' } else { '0' }).collect()
}

/// Inverse of [`basis_label`].
pub fn parse_label(label: &str) -> Option<usize> {
    let mut i = 0usize;
    for (k, ch) in label.chars().enumerate() {
        match ch {
            '0' => {}
            '1' => i |= 1usize.checked_shl(k as u32)?,
            _ => return None,
        }
    }
    Some(i)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub precision: Precision,
    /// 0 means exact mode: no sampling.
    pub shots: u64,
    pub rng_seed: u64,
    pub backend: Backend,
    pub memory_budget: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            precision: Precision::Fp64,
            shots: 0,
            rng_seed: 0,
            backend: Backend::default(),
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: StateVector,
    pub counts: Option<CountsTable>,
}

/// Gates before the trailing MEASURE block. Fails if a measurement is
/// followed by anything else.
pub fn unitary_prefix(gates: &[GateRecord]) -> Result<&[GateRecord], SimError> {
    let first_measure = gates.iter().position(|g| g.kind == GateKind::Measure).unwrap_or(gates.len());
    if let Some(p) = gates[first_measure..].iter().position(|g| g.kind != GateKind::Measure) {
        return Err(SimError::MeasureMidCircuit { position: first_measure + p - 1 });
    }
    Ok(&gates[..first_measure])
}

/// Decodes and runs one tensor circuit.
pub fn run_circuit(circuit: &CircuitTensor, options: &SimOptions) -> Result<RunOutput, SimError> {
    run_gate_list(&circuit.decode()?, options)
}

pub fn run_gate_list(list: &GateList, options: &SimOptions) -> Result<RunOutput, SimError> {
    let gates = unitary_prefix(&list.gates)?;
    let mut state = StateVector::zero_with_budget(list.n_qubits, options.precision, options.memory_budget)?
        .with_backend(options.backend);
    for g in gates {
        state.apply(g)?;
    }
    for g in &list.gates[gates.len()..] {
        state.check_qubit(g.target)?;
    }
    let counts = if options.shots > 0 { Some(sample_counts(&state, options.shots, options.rng_seed)?) } else { None };
    Ok(RunOutput { state, counts })
}

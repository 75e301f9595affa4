//! Fixed-capacity tensor representation of gate-level circuits.
//!
//! A [`CircuitSet`] stores every circuit in three parallel arrays: a header
//! row `(circ_type, n_qubits, n_gates)`, `d` integer gate rows
//! `(kind_id, control_or_-1, target)` and `d` gate parameters. `d` (the
//! capacity) is shared by all members; rows at positions `>= n_gates` are
//! zero padding. [`encode_circuits`] and [`decode_circuits`] convert between
//! this layout and typed [`GateList`]s.

pub mod container;
#[cfg(feature = "hdf5")]
pub mod hdf5;

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Control column value for gates without a control qubit.
pub const NO_CONTROL: i32 = -1;

/// The padding row stored at every position `>= n_gates`.
pub const PADDING_ROW: [i32; 3] = [0, NO_CONTROL, 0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    H,
    Rx,
    Ry,
    Rz,
    Cx,
    Cr1,
    Measure,
}

impl GateKind {
    pub const ALL: [GateKind; 7] = [
        GateKind::H,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Cx,
        GateKind::Cr1,
        GateKind::Measure,
    ];

    pub fn id(self) -> i32 {
        match self {
            GateKind::H => 0,
            GateKind::Rx => 1,
            GateKind::Ry => 2,
            GateKind::Rz => 3,
            GateKind::Cx => 4,
            GateKind::Cr1 => 5,
            GateKind::Measure => 6,
        }
    }

    pub fn from_id(id: i32) -> Option<GateKind> {
        usize::try_from(id).ok().and_then(|i| Self::ALL.get(i).copied())
    }

    /// Whether the gate carries a rotation angle.
    pub fn takes_param(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Cr1)
    }

    pub fn is_two_qubit(self) -> bool {
        matches!(self, GateKind::Cx | GateKind::Cr1)
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::Cx => "cx",
            GateKind::Cr1 => "cr1",
            GateKind::Measure => "measure",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One typed gate: `(kind, control, target, param)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub kind: GateKind,
    pub control: Option<usize>,
    pub target: usize,
    pub param: f64,
}

impl GateRecord {
    pub fn h(target: usize) -> Self {
        Self::single(GateKind::H, target, 0.0)
    }

    pub fn rx(target: usize, theta: f64) -> Self {
        Self::single(GateKind::Rx, target, theta)
    }

    pub fn ry(target: usize, theta: f64) -> Self {
        Self::single(GateKind::Ry, target, theta)
    }

    pub fn rz(target: usize, theta: f64) -> Self {
        Self::single(GateKind::Rz, target, theta)
    }

    pub fn measure(target: usize) -> Self {
        Self::single(GateKind::Measure, target, 0.0)
    }

    pub fn cx(control: usize, target: usize) -> Self {
        GateRecord { kind: GateKind::Cx, control: Some(control), target, param: 0.0 }
    }

    pub fn cr1(control: usize, target: usize, lambda: f64) -> Self {
        GateRecord { kind: GateKind::Cr1, control: Some(control), target, param: lambda }
    }

    fn single(kind: GateKind, target: usize, param: f64) -> Self {
        GateRecord { kind, control: None, target, param }
    }

    /// Qubits the gate acts on, control first.
    pub fn qubits(&self) -> impl Iterator<Item = usize> {
        self.control.into_iter().chain(std::iter::once(self.target))
    }

    /// Integer row as stored in the tensor.
    pub fn row(&self) -> [i32; 3] {
        [
            self.kind.id(),
            self.control.map_or(NO_CONTROL, |c| c as i32),
            self.target as i32,
        ]
    }
}

impl fmt::Display for GateRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if self.kind.takes_param() {
            write!(f, "({})", self.param)?;
        }
        match self.control {
            Some(c) => write!(f, " q{c},q{}", self.target),
            None => write!(f, " q{}", self.target),
        }
    }
}

/// Circuit family tag stored in the first header column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CircType {
    RandomCx,
    Qft,
    QCrank,
    Imported,
}

impl CircType {
    pub fn id(self) -> i32 {
        match self {
            CircType::RandomCx => 0,
            CircType::Qft => 1,
            CircType::QCrank => 2,
            CircType::Imported => 3,
        }
    }

    pub fn from_id(id: i32) -> Option<CircType> {
        match id {
            0 => Some(CircType::RandomCx),
            1 => Some(CircType::Qft),
            2 => Some(CircType::QCrank),
            3 => Some(CircType::Imported),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitHeader {
    pub circ_type: CircType,
    pub n_qubits: usize,
    pub n_gates: usize,
}

impl CircuitHeader {
    pub fn row(&self) -> [i32; 3] {
        [self.circ_type.id(), self.n_qubits as i32, self.n_gates as i32]
    }
}

/// A typed, unpadded gate program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateList {
    pub circ_type: CircType,
    pub n_qubits: usize,
    pub gates: Vec<GateRecord>,
}

impl GateList {
    pub fn new(circ_type: CircType, n_qubits: usize, gates: Vec<GateRecord>) -> Self {
        GateList { circ_type, n_qubits, gates }
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }
}

/// One circuit in tensor form. `gate_type` and `gate_param` both have length
/// equal to the capacity of the owning set.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitTensor {
    pub header: CircuitHeader,
    pub gate_type: Vec<[i32; 3]>,
    pub gate_param: Vec<f64>,
}

impl CircuitTensor {
    /// Encodes a single gate list with capacity equal to its gate count.
    pub fn from_gate_list(list: &GateList) -> Result<Self, IrError> {
        Self::with_capacity(list, list.gates.len())
    }

    /// Encodes `list` padded to `capacity` rows.
    pub fn with_capacity(list: &GateList, capacity: usize) -> Result<Self, IrError> {
        check_gate_list(0, list)?;
        if list.gates.len() > capacity {
            return Err(IrError::CapacityExceeded {
                circuit: 0,
                n_gates: list.gates.len(),
                capacity,
            });
        }
        let mut gate_type = vec![PADDING_ROW; capacity];
        let mut gate_param = vec![0.0; capacity];
        for (i, g) in list.gates.iter().enumerate() {
            gate_type[i] = g.row();
            gate_param[i] = canonical_param(g.kind, g.param);
        }
        Ok(CircuitTensor {
            header: CircuitHeader {
                circ_type: list.circ_type,
                n_qubits: list.n_qubits,
                n_gates: list.gates.len(),
            },
            gate_type,
            gate_param,
        })
    }

    pub fn capacity(&self) -> usize {
        self.gate_type.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.header.n_qubits
    }

    /// Strips padding and converts the rows back to typed records.
    pub fn decode(&self) -> Result<GateList, IrError> {
        decode_tensor(0, self)
    }

    /// Re-pads to a larger capacity.
    fn grow_to(&mut self, capacity: usize) {
        if capacity > self.gate_type.len() {
            self.gate_type.resize(capacity, PADDING_ROW);
            self.gate_param.resize(capacity, 0.0);
        }
    }
}

/// An ordered collection of circuits sharing one capacity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CircuitSet {
    pub capacity: usize,
    pub circuits: Vec<CircuitTensor>,
    pub metadata: BTreeMap<String, String>,
}

impl CircuitSet {
    /// Collects tensors into a set, padding each to the largest capacity.
    pub fn from_tensors(tensors: Vec<CircuitTensor>) -> Result<Self, IrError> {
        if tensors.is_empty() {
            return Err(IrError::EmptyInput);
        }
        let capacity = tensors.iter().map(CircuitTensor::capacity).max().unwrap_or(0);
        let mut set = CircuitSet { capacity, circuits: Vec::with_capacity(tensors.len()), metadata: BTreeMap::new() };
        for t in tensors {
            set.push(t);
        }
        Ok(set)
    }

    /// Appends a tensor, growing the shared capacity when needed. Capacity
    /// never shrinks.
    pub fn push(&mut self, mut tensor: CircuitTensor) {
        let capacity = self.capacity.max(tensor.capacity()).max(tensor.header.n_gates);
        if capacity > self.capacity {
            self.capacity = capacity;
            for c in &mut self.circuits {
                c.grow_to(capacity);
            }
        }
        tensor.grow_to(capacity);
        self.circuits.push(tensor);
        self.record_shape();
    }

    pub fn len(&self) -> usize {
        self.circuits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.circuits.is_empty()
    }

    fn record_shape(&mut self) {
        self.metadata.insert("capacity".into(), self.capacity.to_string());
        self.metadata.insert("n_circ".into(), self.circuits.len().to_string());
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IrError {
    #[error("no circuits to encode")]
    EmptyInput,
    #[error("circuit {circuit}, gate {gate}: qubit {qubit} out of range for {n_qubits} qubits")]
    InvalidQubitIndex { circuit: usize, gate: usize, qubit: i64, n_qubits: usize },
    #[error("circuit {circuit}, gate {gate}: control equals target")]
    SelfPair { circuit: usize, gate: usize },
    #[error("circuit {circuit}, gate {gate}: {kind} {problem}")]
    Arity { circuit: usize, gate: usize, kind: GateKind, problem: &'static str },
    #[error("circuit {circuit}, gate {gate}: parameter {value} is not finite")]
    NonFiniteParam { circuit: usize, gate: usize, value: f64 },
    #[error("circuit {circuit}: {n_gates} gates exceed capacity {capacity}")]
    CapacityExceeded { circuit: usize, n_gates: usize, capacity: usize },
    #[error("circuit {circuit}: invalid qubit count {n_qubits}")]
    InvalidQubitCount { circuit: usize, n_qubits: usize },
    #[error("corrupt tensor at circuit {circuit}, position {gate}: {reason}")]
    CorruptTensor { circuit: usize, gate: usize, reason: String },
}

/// CR1 angles are stored in `[0, 2π)`; other parameters pass through.
pub fn canonical_param(kind: GateKind, param: f64) -> f64 {
    if kind != GateKind::Cr1 {
        return param;
    }
    let r = param.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

fn check_gate_list(circuit: usize, list: &GateList) -> Result<(), IrError> {
    if list.n_qubits == 0 || list.n_qubits > i32::MAX as usize {
        return Err(IrError::InvalidQubitCount { circuit, n_qubits: list.n_qubits });
    }
    for (gate, g) in list.gates.iter().enumerate() {
        check_record(circuit, gate, g, list.n_qubits)?;
    }
    Ok(())
}

fn check_record(circuit: usize, gate: usize, g: &GateRecord, n_qubits: usize) -> Result<(), IrError> {
    for q in g.qubits() {
        if q >= n_qubits {
            return Err(IrError::InvalidQubitIndex { circuit, gate, qubit: q as i64, n_qubits });
        }
    }
    match (g.kind.is_two_qubit(), g.control) {
        (true, None) => {
            return Err(IrError::Arity { circuit, gate, kind: g.kind, problem: "requires a control qubit" })
        }
        (false, Some(_)) => {
            return Err(IrError::Arity { circuit, gate, kind: g.kind, problem: "takes no control qubit" })
        }
        (true, Some(c)) if c == g.target => return Err(IrError::SelfPair { circuit, gate }),
        _ => {}
    }
    if !g.param.is_finite() {
        return Err(IrError::NonFiniteParam { circuit, gate, value: g.param });
    }
    if !g.kind.takes_param() && g.param != 0.0 {
        return Err(IrError::Arity { circuit, gate, kind: g.kind, problem: "takes no parameter" });
    }
    Ok(())
}

/// Encodes gate lists into a set whose capacity is the largest gate count.
pub fn encode_circuits(lists: &[GateList]) -> Result<CircuitSet, IrError> {
    if lists.is_empty() {
        return Err(IrError::EmptyInput);
    }
    for (i, list) in lists.iter().enumerate() {
        check_gate_list(i, list)?;
    }
    let capacity = lists.iter().map(|l| l.gates.len()).max().unwrap_or(0);
    let circuits = lists
        .iter()
        .map(|l| CircuitTensor::with_capacity(l, capacity))
        .collect::<Result<Vec<_>, _>>()?;
    let mut set = CircuitSet { capacity, circuits, metadata: BTreeMap::new() };
    set.record_shape();
    Ok(set)
}

/// Decodes every circuit of a set, stripping padding.
pub fn decode_circuits(set: &CircuitSet) -> Result<Vec<GateList>, IrError> {
    set.circuits
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if c.capacity() != set.capacity || c.gate_param.len() != set.capacity {
                return Err(IrError::CorruptTensor {
                    circuit: i,
                    gate: 0,
                    reason: format!("tensor length {} differs from set capacity {}", c.capacity(), set.capacity),
                });
            }
            decode_tensor(i, c)
        })
        .collect()
}

fn corrupt(circuit: usize, gate: usize, reason: impl Into<String>) -> IrError {
    IrError::CorruptTensor { circuit, gate, reason: reason.into() }
}

fn decode_tensor(circuit: usize, t: &CircuitTensor) -> Result<GateList, IrError> {
    let n_gates = t.header.n_gates;
    let n_qubits = t.header.n_qubits;
    if n_qubits == 0 {
        return Err(IrError::InvalidQubitCount { circuit, n_qubits });
    }
    if t.gate_param.len() != t.gate_type.len() {
        return Err(corrupt(circuit, 0, "gate_type and gate_param lengths differ"));
    }
    if n_gates > t.capacity() {
        return Err(IrError::CapacityExceeded { circuit, n_gates, capacity: t.capacity() });
    }
    let mut gates = Vec::with_capacity(n_gates);
    for (pos, (row, &param)) in t.gate_type.iter().zip(&t.gate_param).enumerate() {
        if pos >= n_gates {
            if *row != PADDING_ROW || param.to_bits() != 0 {
                return Err(corrupt(circuit, pos, "non-zero record beyond n_gates"));
            }
            continue;
        }
        let kind = GateKind::from_id(row[0])
            .ok_or_else(|| corrupt(circuit, pos, format!("gate kind id {} out of range", row[0])))?;
        let control = match row[1] {
            NO_CONTROL => None,
            c if c >= 0 => Some(c as usize),
            c => return Err(IrError::InvalidQubitIndex { circuit, gate: pos, qubit: c as i64, n_qubits }),
        };
        if row[2] < 0 {
            return Err(IrError::InvalidQubitIndex { circuit, gate: pos, qubit: row[2] as i64, n_qubits });
        }
        let g = GateRecord { kind, control, target: row[2] as usize, param };
        check_record(circuit, pos, &g, n_qubits)?;
        gates.push(g);
    }
    Ok(GateList { circ_type: t.header.circ_type, n_qubits, gates })
}

/// One invariant violation found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub circuit: usize,
    pub gate: Option<usize>,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    CapacityMismatch { len: usize, capacity: usize },
    CapacityExceeded { n_gates: usize, capacity: usize },
    InvalidQubitCount,
    UnknownKind(i32),
    InvalidQubitIndex(i64),
    SelfPair,
    MissingControl,
    UnexpectedControl,
    NonFiniteParam,
    UnexpectedParam,
    NonZeroPadding,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.gate {
            Some(g) => write!(f, "circuit {} gate {}: {:?}", self.circuit, g, self.kind),
            None => write!(f, "circuit {}: {:?}", self.circuit, self.kind),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every invariant violation in the set. Unlike decoding, this does not
/// stop at the first problem.
pub fn validate(set: &CircuitSet) -> ValidationReport {
    let mut violations = Vec::new();
    for (ci, c) in set.circuits.iter().enumerate() {
        let mut push = |gate: Option<usize>, kind| violations.push(Violation { circuit: ci, gate, kind });
        if c.gate_type.len() != set.capacity || c.gate_param.len() != set.capacity {
            push(None, ViolationKind::CapacityMismatch { len: c.gate_type.len(), capacity: set.capacity });
        }
        let n_gates = c.header.n_gates;
        let n_qubits = c.header.n_qubits;
        if n_gates > set.capacity {
            push(None, ViolationKind::CapacityExceeded { n_gates, capacity: set.capacity });
        }
        if n_qubits == 0 {
            push(None, ViolationKind::InvalidQubitCount);
        }
        for (pos, row) in c.gate_type.iter().enumerate() {
            let param = c.gate_param.get(pos).copied().unwrap_or(0.0);
            if pos >= n_gates {
                if *row != PADDING_ROW || param.to_bits() != 0 {
                    push(Some(pos), ViolationKind::NonZeroPadding);
                }
                continue;
            }
            let Some(kind) = GateKind::from_id(row[0]) else {
                push(Some(pos), ViolationKind::UnknownKind(row[0]));
                continue;
            };
            let in_range = |q: i32| q >= 0 && (q as usize) < n_qubits;
            if !in_range(row[2]) {
                push(Some(pos), ViolationKind::InvalidQubitIndex(row[2] as i64));
            }
            if row[1] != NO_CONTROL && !in_range(row[1]) {
                push(Some(pos), ViolationKind::InvalidQubitIndex(row[1] as i64));
            }
            match (kind.is_two_qubit(), row[1]) {
                (true, NO_CONTROL) => push(Some(pos), ViolationKind::MissingControl),
                (false, c) if c != NO_CONTROL => push(Some(pos), ViolationKind::UnexpectedControl),
                (true, c) if c == row[2] => push(Some(pos), ViolationKind::SelfPair),
                _ => {}
            }
            if !param.is_finite() {
                push(Some(pos), ViolationKind::NonFiniteParam);
            } else if !kind.takes_param() && param != 0.0 {
                push(Some(pos), ViolationKind::UnexpectedParam);
            }
        }
    }
    ValidationReport { violations }
}

//! Multi-worker state-vector execution.
//!
//! The amplitude array is split into `W` contiguous chunks of `2^n / W`
//! amplitudes. Worker `w` owns global indices `w·chunk .. (w+1)·chunk`, so
//! qubits with stride below the chunk length are local and the top
//! `log2 W` qubits select the worker.
//!
//! A gate whose target is non-local is an exchange gate. For each one every
//! worker sends exactly one [`ExchangeMessage`] to its partner
//! (`worker ^ partner_mask`), receives exactly one, updates its own chunk
//! and then waits on a barrier shared by all workers. Payloads carry only
//! what the receiver reads:
//!
//! | gate                        | payload                                  |
//! |-----------------------------|------------------------------------------|
//! | H, RX, RY, RZ               | the sender's whole chunk                 |
//! | CX, control local           | sender amplitudes whose control bit is 1 |
//! | CX, control non-local       | whole chunk if the control bit is 1, else empty |
//! | CR1                         | empty (the phase is diagonal)            |
//!
//! Controls never move data: a worker reads a non-local control bit off its
//! base index.

use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::Barrier;
use std::time::Duration;

use num_complex::Complex64;
use thiserror::Error;

use crate::ir::{CircuitTensor, GateKind, GateList, GateRecord};
use crate::rng::SimRng;
use crate::statevec::kernels::{self, Backend, Mat2};
use crate::statevec::{
    run_gate_list, sample_counts, unitary_prefix, CountsTable, Precision, SimError, SimOptions, StateVector,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PartitionError {
    #[error("worker count {workers} must be a power of two no larger than 2^{n_qubits}")]
    BadWorkerCount { workers: usize, n_qubits: usize },
    #[error("distributed execution supports fp64 only")]
    UnsupportedPrecision,
    #[error("protocol violation on worker {worker}: {detail}")]
    ProtocolViolation { worker: usize, detail: String },
    #[error("partitions are at different sequence numbers: {0:?}")]
    SequenceMismatch(Vec<u64>),
    #[error("partitions do not tile the state: {0}")]
    BadLayout(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Locality {
    Local,
    Exchange { partner_mask: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateTask {
    pub seq: u64,
    pub gate: GateRecord,
    pub locality: Locality,
}

fn check_workers(n_qubits: usize, workers: usize) -> Result<usize, PartitionError> {
    let ok = workers.is_power_of_two() && n_qubits < usize::BITS as usize && workers <= 1usize << n_qubits;
    if !ok {
        return Err(PartitionError::BadWorkerCount { workers, n_qubits });
    }
    Ok((1usize << n_qubits) / workers)
}

/// Locality of a single qubit under `workers` partitions.
pub fn qubit_locality(n_qubits: usize, workers: usize, qubit: usize) -> Result<Locality, PartitionError> {
    let chunk = check_workers(n_qubits, workers)?;
    let stride = 1usize << qubit;
    Ok(if stride < chunk { Locality::Local } else { Locality::Exchange { partner_mask: stride / chunk } })
}

/// Tags every gate with its locality. Only the target decides; MEASURE
/// records are local no-ops.
pub fn plan(gates: &[GateRecord], n_qubits: usize, workers: usize) -> Result<Vec<GateTask>, PartitionError> {
    check_workers(n_qubits, workers)?;
    gates
        .iter()
        .enumerate()
        .map(|(i, g)| {
            for q in g.qubits() {
                if q >= n_qubits {
                    return Err(SimError::IndexOutOfRange { qubit: q, n_qubits }.into());
                }
            }
            if g.control == Some(g.target) {
                return Err(SimError::SelfPair(g.target).into());
            }
            let locality = if g.kind == GateKind::Measure {
                Locality::Local
            } else {
                qubit_locality(n_qubits, workers, g.target)?
            };
            Ok(GateTask { seq: i as u64, gate: *g, locality })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeMessage {
    pub sender: usize,
    pub seq: u64,
    pub payload: Vec<Complex64>,
}

/// One worker's slice of the state.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub worker_id: usize,
    pub base_index: usize,
    pub chunk: Vec<Complex64>,
    /// Number of gate tasks completed.
    pub seq: u64,
}

pub fn scatter(state: &StateVector, workers: usize) -> Result<Vec<Partition>, PartitionError> {
    let chunk = check_workers(state.n_qubits(), workers)?;
    let amps = state.as_f64_slice().ok_or(PartitionError::UnsupportedPrecision)?;
    Ok(amps
        .chunks(chunk)
        .enumerate()
        .map(|(w, c)| Partition { worker_id: w, base_index: w * chunk, chunk: c.to_vec(), seq: 0 })
        .collect())
}

/// Concatenates partitions in worker order and re-checks the norm.
pub fn gather(parts: Vec<Partition>) -> Result<StateVector, PartitionError> {
    if parts.is_empty() {
        return Err(PartitionError::BadLayout("no partitions".into()));
    }
    let seqs: Vec<u64> = parts.iter().map(|p| p.seq).collect();
    if seqs.iter().any(|&s| s != seqs[0]) {
        return Err(PartitionError::SequenceMismatch(seqs));
    }
    let chunk = parts[0].chunk.len();
    let mut amps = Vec::with_capacity(chunk * parts.len());
    for (w, p) in parts.into_iter().enumerate() {
        if p.worker_id != w || p.base_index != w * chunk || p.chunk.len() != chunk {
            return Err(PartitionError::BadLayout(format!(
                "slot {w} holds worker {} at base {} with {} amplitudes",
                p.worker_id,
                p.base_index,
                p.chunk.len()
            )));
        }
        amps.extend(p.chunk);
    }
    let state = StateVector::from_amplitudes(amps)?;
    let norm = state.norm_sqr();
    let drift = (norm - 1.0).abs();
    if drift.is_nan() || drift > Precision::Fp64.sampling_tolerance() {
        return Err(SimError::UnnormalizedState { norm }.into());
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct WorkerStats {
    pub messages_sent: u64,
    pub messages_received: u64,
    pub amplitudes_sent: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, serde::Serialize)]
pub struct DistStats {
    pub workers: usize,
    pub exchange_gates: u64,
    pub per_worker: Vec<WorkerStats>,
}

#[derive(Debug, Clone)]
pub struct DistOutput {
    pub state: StateVector,
    pub counts: Option<CountsTable>,
    pub stats: DistStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DistOptions {
    pub workers: usize,
    /// Random sleeps (up to 200 µs) around every send and receive, seeded
    /// per worker. Used to shake out ordering bugs.
    pub jitter_seed: Option<u64>,
}

impl DistOptions {
    pub fn new(workers: usize) -> Self {
        DistOptions { workers, jitter_seed: None }
    }
}

pub fn execute_distributed(
    circuit: &CircuitTensor,
    dist: &DistOptions,
    options: &SimOptions,
) -> Result<DistOutput, PartitionError> {
    execute_gate_list(&circuit.decode().map_err(SimError::from)?, dist, options)
}

pub fn execute_gate_list(list: &GateList, dist: &DistOptions, options: &SimOptions) -> Result<DistOutput, PartitionError> {
    execute_inner(list, dist, options, None)
}

type Tamper = fn(usize, &mut ExchangeMessage);

fn execute_inner(
    list: &GateList,
    dist: &DistOptions,
    options: &SimOptions,
    tamper: Option<Tamper>,
) -> Result<DistOutput, PartitionError> {
    let w = dist.workers;
    check_workers(list.n_qubits, w)?;
    if options.precision != Precision::Fp64 {
        if w == 1 {
            let out = run_gate_list(list, options)?;
            let stats = DistStats { workers: 1, exchange_gates: 0, per_worker: vec![WorkerStats::default()] };
            return Ok(DistOutput { state: out.state, counts: out.counts, stats });
        }
        return Err(PartitionError::UnsupportedPrecision);
    }
    let gates = unitary_prefix(&list.gates)?;
    let tasks = plan(&list.gates, list.n_qubits, w)?;
    let tasks = &tasks[..gates.len()];
    let initial = StateVector::zero_with_budget(list.n_qubits, Precision::Fp64, options.memory_budget)?;
    let parts = scatter(&initial, w)?;
    drop(initial);

    let (senders, receivers): (Vec<Sender<ExchangeMessage>>, Vec<Receiver<ExchangeMessage>>) =
        (0..w).map(|_| channel()).unzip();
    let barrier = Barrier::new(w);
    let backend = if w == 1 { options.backend } else { Backend::Sequential };

    let results: Vec<(Partition, WorkerStats, Option<PartitionError>)> = std::thread::scope(|s| {
        let handles: Vec<_> = parts
            .into_iter()
            .zip(receivers)
            .map(|(part, rx)| {
                let senders = senders.clone();
                let barrier = &barrier;
                s.spawn(move || {
                    let jitter = dist.jitter_seed.map(|seed| SimRng::seed_from_u64(seed ^ (part.worker_id as u64) << 32));
                    let mut worker = Worker { part, rx, senders, stats: WorkerStats::default(), jitter, backend };
                    let mut first_err = None;
                    for task in tasks {
                        // keep stepping after an error so partners never block
                        if let Err(e) = worker.step(task, barrier, tamper) {
                            first_err.get_or_insert(e);
                        }
                    }
                    (worker.part, worker.stats, first_err)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });

    let mut parts = Vec::with_capacity(w);
    let mut stats = DistStats {
        workers: w,
        exchange_gates: tasks.iter().filter(|t| t.locality != Locality::Local).count() as u64,
        per_worker: Vec::with_capacity(w),
    };
    for (p, st, err) in results {
        if let Some(e) = err {
            return Err(e);
        }
        parts.push(p);
        stats.per_worker.push(st);
    }
    let state = gather(parts)?.with_backend(options.backend);
    let counts = if options.shots > 0 { Some(sample_counts(&state, options.shots, options.rng_seed)?) } else { None };
    Ok(DistOutput { state, counts, stats })
}

struct Worker {
    part: Partition,
    rx: Receiver<ExchangeMessage>,
    senders: Vec<Sender<ExchangeMessage>>,
    stats: WorkerStats,
    jitter: Option<SimRng>,
    backend: Backend,
}

impl Worker {
    fn pause(&mut self) {
        if let Some(r) = self.jitter.as_mut() {
            std::thread::sleep(Duration::from_micros(r.below(200)));
        }
    }

    fn violation(&self, detail: String) -> PartitionError {
        PartitionError::ProtocolViolation { worker: self.part.worker_id, detail }
    }

    fn step(&mut self, task: &GateTask, barrier: &Barrier, tamper: Option<Tamper>) -> Result<(), PartitionError> {
        if task.seq != self.part.seq {
            return Err(self.violation(format!("task {} scheduled at sequence {}", task.seq, self.part.seq)));
        }
        let result = match task.locality {
            Locality::Local => self.local(&task.gate),
            Locality::Exchange { partner_mask } => {
                let r = self.exchange(task, partner_mask, tamper);
                barrier.wait();
                r
            }
        };
        self.part.seq += 1;
        result
    }

    fn local(&mut self, g: &GateRecord) -> Result<(), PartitionError> {
        let (base, chunk, b) = (self.part.base_index, &mut self.part.chunk, self.backend);
        match (g.kind, g.control) {
            (GateKind::Measure, _) => {}
            (GateKind::Cx, Some(c)) => kernels::apply_cx(chunk, base, c, g.target, b),
            (GateKind::Cr1, Some(c)) => kernels::apply_cr1(chunk, base, c, g.target, g.param, b),
            (kind, _) => {
                let m: Mat2<f64> = kernels::single_qubit_matrix(kind, g.param).ok_or(SimError::NotSingleQubit(kind))?;
                kernels::apply_mat(chunk, g.target, &m, b);
            }
        }
        Ok(())
    }

    fn exchange(&mut self, task: &GateTask, partner_mask: usize, tamper: Option<Tamper>) -> Result<(), PartitionError> {
        let g = &task.gate;
        let me = self.part.worker_id;
        let partner = me ^ partner_mask;
        let base = self.part.base_index;
        let len = self.part.chunk.len();
        let local_control = |c: usize| (1usize << c) < len;

        let payload: Vec<Complex64> = match (g.kind, g.control) {
            (GateKind::Cr1, _) => Vec::new(),
            (GateKind::Cx, Some(c)) if local_control(c) => {
                let cm = 1usize << c;
                self.part.chunk.iter().enumerate().filter(|(i, _)| i & cm != 0).map(|(_, a)| *a).collect()
            }
            (GateKind::Cx, Some(c)) => {
                if base & (1 << c) != 0 {
                    self.part.chunk.clone()
                } else {
                    Vec::new()
                }
            }
            _ => self.part.chunk.clone(),
        };
        let mut msg = ExchangeMessage { sender: me, seq: task.seq, payload };
        if let Some(f) = tamper {
            f(me, &mut msg);
        }
        self.stats.amplitudes_sent += msg.payload.len() as u64;
        self.pause();
        self.senders[partner].send(msg).map_err(|_| self.violation("partner channel closed".into()))?;
        self.stats.messages_sent += 1;
        self.pause();
        let got = self.rx.recv().map_err(|_| self.violation("receive channel closed".into()))?;
        self.stats.messages_received += 1;
        if got.seq != task.seq || got.sender != partner {
            return Err(self.violation(format!(
                "expected sequence {} from worker {partner}, got sequence {} from worker {}",
                task.seq, got.seq, got.sender
            )));
        }
        let theirs = got.payload;

        match (g.kind, g.control) {
            (GateKind::Cr1, Some(c)) => {
                expect_len(self, &theirs, 0)?;
                kernels::apply_cr1(&mut self.part.chunk, base, c, g.target, g.param, self.backend);
            }
            (GateKind::Cx, Some(c)) if local_control(c) => {
                expect_len(self, &theirs, len / 2)?;
                let cm = 1usize << c;
                let slots = self.part.chunk.iter_mut().enumerate().filter(|(i, _)| i & cm != 0);
                for ((_, a), b) in slots.zip(theirs) {
                    *a = b;
                }
            }
            (GateKind::Cx, Some(c)) => {
                if base & (1 << c) != 0 {
                    expect_len(self, &theirs, len)?;
                    self.part.chunk = theirs;
                } else {
                    expect_len(self, &theirs, 0)?;
                }
            }
            (kind, _) => {
                expect_len(self, &theirs, len)?;
                let m: Mat2<f64> = kernels::single_qubit_matrix(kind, g.param).ok_or(SimError::NotSingleQubit(kind))?;
                let high = base & (1 << g.target) != 0;
                for (a, b) in self.part.chunk.iter_mut().zip(theirs) {
                    *a = if high { m.hi(b, *a) } else { m.lo(*a, b) };
                }
            }
        }
        Ok(())
    }
}

fn expect_len(w: &Worker, payload: &[Complex64], want: usize) -> Result<(), PartitionError> {
    if payload.len() != want {
        return Err(w.violation(format!("payload of {} amplitudes, expected {want}", payload.len())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::CircType;

    #[test]
    fn plan_examples() {
        assert_eq!(qubit_locality(4, 4, 0).unwrap(), Locality::Local);
        assert_eq!(qubit_locality(4, 4, 1).unwrap(), Locality::Local);
        assert_eq!(qubit_locality(4, 4, 2).unwrap(), Locality::Exchange { partner_mask: 1 });
        assert_eq!(qubit_locality(4, 4, 3).unwrap(), Locality::Exchange { partner_mask: 2 });
        let gates = vec![GateRecord::h(3), GateRecord::cx(3, 0), GateRecord::cr1(0, 2, 0.5)];
        let p = plan(&gates, 4, 1).unwrap();
        assert!(p.iter().all(|t| t.locality == Locality::Local));
        let p = plan(&gates, 4, 4).unwrap();
        assert_eq!(p[1].locality, Locality::Local);
        assert_eq!(p[2].locality, Locality::Exchange { partner_mask: 1 });
    }

    #[test]
    fn bad_worker_counts() {
        for w in [0, 3, 16] {
            assert_eq!(qubit_locality(3, w, 0), Err(PartitionError::BadWorkerCount { workers: w, n_qubits: 3 }));
        }
    }

    #[test]
    fn cross_boundary_cx() {
        let list = GateList::new(CircType::Imported, 3, vec![GateRecord::rx(0, std::f64::consts::PI), GateRecord::cx(0, 2)]);
        let out = execute_gate_list(&list, &DistOptions::new(2), &SimOptions::default()).unwrap();
        assert!((out.state.amplitude(5).norm() - 1.0).abs() < 1e-15);
        assert_eq!(out.stats.exchange_gates, 1);
        for st in &out.stats.per_worker {
            assert_eq!((st.messages_sent, st.messages_received), (1, 1));
            assert_eq!(st.amplitudes_sent, 2);
        }
    }

    #[test]
    fn tampered_sequence_is_reported() {
        let list = GateList::new(CircType::Imported, 2, vec![GateRecord::h(1), GateRecord::h(0), GateRecord::h(1)]);
        fn bump(worker: usize, m: &mut ExchangeMessage) {
            if worker == 1 {
                m.seq += 7;
            }
        }
        let err = execute_inner(&list, &DistOptions::new(2), &SimOptions::default(), Some(bump)).unwrap_err();
        assert!(matches!(err, PartitionError::ProtocolViolation { worker: 0, .. }), "{err}");
    }

    #[test]
    fn fp32_only_single_worker() {
        let list = GateList::new(CircType::Imported, 2, vec![GateRecord::h(1)]);
        let opts = SimOptions { precision: Precision::Fp32, ..SimOptions::default() };
        assert!(execute_gate_list(&list, &DistOptions::new(1), &opts).is_ok());
        assert_eq!(
            execute_gate_list(&list, &DistOptions::new(2), &opts).unwrap_err(),
            PartitionError::UnsupportedPrecision
        );
    }

    #[test]
    fn gather_checks() {
        let s = StateVector::zero(3, Precision::Fp64).unwrap();
        let mut parts = scatter(&s, 4).unwrap();
        assert_eq!(parts[0].chunk[0], Complex64::new(1.0, 0.0));
        assert!(parts[1..].iter().all(|p| p.chunk.iter().all(|a| a.norm() == 0.0)));
        parts[2].seq = 1;
        assert!(matches!(gather(parts.clone()), Err(PartitionError::SequenceMismatch(_))));
        parts[2].seq = 0;
        parts.swap(1, 2);
        assert!(matches!(gather(parts), Err(PartitionError::BadLayout(_))));
    }
}

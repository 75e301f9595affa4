//! Timed workload sweeps with CSV output, scaling fits and SVG charts.
//!
//! Large-machine results do not carry over to one host: GPU-versus-CPU
//! speedups of about 400x, 42-qubit runs spread over 1024 GPUs, and image
//! runs with 3M to 98M shots. What a sweep can check is the shape of the
//! cost curve. A single-worker state vector doubles in size per qubit, so
//! the fitted slope of log2(median time) against n should fall in
//! [`CONFORMANT_SLOPE`].

mod chart;
mod scaling;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::{build_qft, generate_random_gate_list, GenError, QftSpec, RandomSpec};
use crate::ir::GateList;
use crate::partition::{execute_gate_list, DistOptions, PartitionError};
use crate::qcrank::{build_qcrank_circuit, prepare_angles, ImageGray, QCrankError};
use crate::statevec::{run_gate_list, Precision, SimError, SimOptions, StateVector, DEFAULT_MEMORY_BUDGET};

pub use chart::emit_chart;
pub use scaling::{fit_scaling, median, ScalingFit, CONFORMANT_SLOPE};

pub const CSV_HEADER: [&str; 8] = ["workload", "n_qubits", "gates", "precision", "workers", "rep", "wall_ms", "seed"];

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("the qubit range is empty")]
    EmptySpec,
    #[error("invalid benchmark spec: {0}")]
    InvalidSpec(String),
    #[error("need at least {need} distinct qubit counts for {series}, got {got}")]
    InsufficientData { series: String, need: usize, got: usize },
    #[error("no records to chart")]
    EmptyInput,
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    QCrank(#[from] QCrankError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Workload {
    Random,
    Qft,
    Qcrank,
}

impl Workload {
    pub fn as_str(self) -> &'static str {
        match self {
            Workload::Random => "random",
            Workload::Qft => "qft",
            Workload::Qcrank => "qcrank",
        }
    }
}

impl std::fmt::Display for Workload {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Workload {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Workload::Random),
            "qft" => Ok(Workload::Qft),
            "qcrank" => Ok(Workload::Qcrank),
            other => Err(format!("unknown workload {other:?} (expected random, qft or qcrank)")),
        }
    }
}

/// A sweep over qubit counts, precisions and worker counts.
///
/// For `qcrank`, `n_data` data qubits are used and the remaining
/// `n − n_data` qubits address a synthetic gradient image that fills every
/// slot. fp32 runs single-worker only; fp32 grid points with more than one
/// worker are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub workload: Workload,
    pub qubits_min: usize,
    pub qubits_max: usize,
    pub blocks: usize,
    pub n_data: usize,
    pub precisions: Vec<Precision>,
    pub workers: Vec<usize>,
    pub shots: u64,
    pub reps: usize,
    pub seed: u64,
    pub parallel_circuits: bool,
    pub memory_budget: u64,
}

impl Default for BenchSpec {
    fn default() -> Self {
        BenchSpec {
            workload: Workload::Random,
            qubits_min: 10,
            qubits_max: 14,
            blocks: 100,
            n_data: 2,
            precisions: vec![Precision::Fp64],
            workers: vec![1],
            shots: 0,
            reps: 3,
            seed: 1,
            parallel_circuits: false,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

impl BenchSpec {
    pub fn check(&self) -> Result<(), BenchError> {
        if self.qubits_min > self.qubits_max {
            return Err(BenchError::EmptySpec);
        }
        if self.precisions.is_empty() || self.workers.is_empty() || self.reps == 0 {
            return Err(BenchError::InvalidSpec("precisions, workers and reps must be non-empty".into()));
        }
        let min_qubits = match self.workload {
            Workload::Random => 2,
            Workload::Qft => 1,
            Workload::Qcrank => self.n_data + 1,
        };
        if self.qubits_min < min_qubits {
            return Err(BenchError::InvalidSpec(format!("{} needs at least {min_qubits} qubits", self.workload)));
        }
        for &p in &self.precisions {
            let bytes = (1u128 << self.qubits_max.min(127)) * p.amplitude_bytes() as u128;
            if bytes > self.memory_budget as u128 {
                return Err(SimError::TooManyQubits {
                    n_qubits: self.qubits_max,
                    required_bytes: bytes,
                    budget_bytes: self.memory_budget,
                }
                .into());
            }
        }
        Ok(())
    }

    /// Grid points in execution order: n, then precision, then workers.
    fn grid(&self) -> Vec<(usize, Precision, usize)> {
        let mut out = Vec::new();
        for n in self.qubits_min..=self.qubits_max {
            for &p in &self.precisions {
                for &w in &self.workers {
                    if p == Precision::Fp32 && w > 1 {
                        continue;
                    }
                    out.push((n, p, w));
                }
            }
        }
        out
    }

    fn circuit(&self, n: usize) -> Result<GateList, BenchError> {
        Ok(match self.workload {
            Workload::Random => generate_random_gate_list(&RandomSpec {
                n_qubits: n,
                n_blocks: self.blocks,
                seed: self.seed,
                include_measure: false,
            })?,
            Workload::Qft => build_qft(&QftSpec { n_qubits: n, reversed: false })?,
            Workload::Qcrank => {
                let image = gradient_image(n - self.n_data, self.n_data);
                let mut g = build_qcrank_circuit(&prepare_angles(&image, n - self.n_data, self.n_data)?);
                g.gates.retain(|r| r.kind != crate::ir::GateKind::Measure);
                g
            }
        })
    }
}

/// `n_data` columns by `2^m` rows, brightness rising along the rows.
pub fn gradient_image(m: usize, n_data: usize) -> ImageGray {
    let h = 1usize << m;
    let pixels = (0..h * n_data).map(|k| ((k * 255) / (h * n_data - 1).max(1)) as u8).collect();
    ImageGray::new(n_data, h, pixels).expect("shape is consistent")
}

/// One timed run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub workload: Workload,
    pub n_qubits: usize,
    pub gates: usize,
    pub precision: Precision,
    pub workers: usize,
    pub rep: usize,
    pub wall_ms: f64,
    pub seed: u64,
}

impl BenchRecord {
    /// Bytes held by the amplitude array during the run.
    pub fn peak_amplitude_bytes(&self) -> u128 {
        (1u128 << self.n_qubits) * self.precision.amplitude_bytes() as u128
    }
}

/// Time source for [`run_suite`]. It is read exactly twice per record:
/// immediately before and after the simulation call.
pub trait Clock: Sync {
    fn now(&self) -> Duration;
}

pub struct MonotonicClock(Instant);

impl MonotonicClock {
    pub fn new() -> Self {
        MonotonicClock(Instant::now())
    }
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for MonotonicClock {
    fn now(&self) -> Duration {
        self.0.elapsed()
    }
}

/// Fake clock that advances by `step` on every read.
#[derive(Debug, Default)]
pub struct SteppingClock {
    step_ns: u64,
    reads: AtomicU64,
}

impl SteppingClock {
    pub fn new(step: Duration) -> Self {
        SteppingClock { step_ns: step.as_nanos() as u64, reads: AtomicU64::new(0) }
    }

    pub fn reads(&self) -> u64 {
        self.reads.load(Ordering::SeqCst)
    }
}

impl Clock for SteppingClock {
    fn now(&self) -> Duration {
        let k = self.reads.fetch_add(1, Ordering::SeqCst) + 1;
        Duration::from_nanos(k * self.step_ns)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutput {
    pub records: Vec<BenchRecord>,
    /// Hash of the final amplitudes per record, for cross-configuration
    /// comparisons.
    pub state_digests: Vec<u64>,
}

pub fn state_digest(state: &StateVector) -> u64 {
    let mut h = DefaultHasher::new();
    state.n_qubits().hash(&mut h);
    for a in state.to_complex64() {
        a.re.to_bits().hash(&mut h);
        a.im.to_bits().hash(&mut h);
    }
    h.finish()
}

fn time_one(
    spec: &BenchSpec,
    list: &GateList,
    precision: Precision,
    workers: usize,
    rep: usize,
    clock: &dyn Clock,
) -> Result<(BenchRecord, u64), BenchError> {
    let options = SimOptions {
        precision,
        shots: spec.shots,
        rng_seed: spec.seed,
        memory_budget: spec.memory_budget,
        ..SimOptions::default()
    };
    let start = clock.now();
    let state = if workers == 1 {
        run_gate_list(list, &options)?.state
    } else {
        execute_gate_list(list, &DistOptions::new(workers), &options)?.state
    };
    let end = clock.now();
    let record = BenchRecord {
        workload: spec.workload,
        n_qubits: list.n_qubits,
        gates: list.gates.len(),
        precision,
        workers,
        rep,
        wall_ms: (end - start).as_secs_f64() * 1e3,
        seed: spec.seed,
    };
    Ok((record, state_digest(&state)))
}

/// Runs every grid point `reps` times, handing each record to `sink` as
/// soon as it exists. Circuit generation happens outside the timed region.
pub fn run_suite(
    spec: &BenchSpec,
    clock: &dyn Clock,
    mut sink: impl FnMut(&BenchRecord) -> Result<(), BenchError>,
) -> Result<SuiteOutput, BenchError> {
    spec.check()?;
    let mut out = SuiteOutput { records: Vec::new(), state_digests: Vec::new() };
    let grid = spec.grid();
    if spec.parallel_circuits {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            let jobs: Vec<(usize, Precision, usize, usize)> =
                grid.iter().flat_map(|&(n, p, w)| (0..spec.reps).map(move |r| (n, p, w, r))).collect();
            let results: Vec<Result<(BenchRecord, u64), BenchError>> = jobs
                .par_iter()
                .map(|&(n, p, w, r)| {
                    let list = spec.circuit(n)?;
                    time_one(spec, &list, p, w, r, clock)
                })
                .collect();
            for r in results {
                let (rec, digest) = r?;
                sink(&rec)?;
                out.records.push(rec);
                out.state_digests.push(digest);
            }
            return Ok(out);
        }
    }
    let mut cached: Option<(usize, GateList)> = None;
    for (n, p, w) in grid {
        if cached.as_ref().map(|c| c.0) != Some(n) {
            cached = Some((n, spec.circuit(n)?));
        }
        let list = &cached.as_ref().expect("just filled").1;
        for rep in 0..spec.reps {
            let (rec, digest) = time_one(spec, list, p, w, rep, clock)?;
            sink(&rec)?;
            out.records.push(rec);
            out.state_digests.push(digest);
        }
    }
    Ok(out)
}

/// Runs the suite, writing CSV rows to `path` as they complete.
pub fn run_suite_to_csv(spec: &BenchSpec, clock: &dyn Clock, path: &Path) -> Result<SuiteOutput, BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    let out = run_suite(spec, clock, |r| {
        w.serialize(r)?;
        w.flush()?;
        Ok(())
    });
    w.flush()?;
    out
}

pub fn records_to_csv(records: &[BenchRecord]) -> Result<String, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if records.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn records_from_csv(text: &str) -> Result<Vec<BenchRecord>, BenchError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(BenchError::InvalidSpec(format!("unexpected CSV header {header:?}")));
    }
    Ok(r.deserialize().collect::<Result<Vec<BenchRecord>, _>>()?)
}

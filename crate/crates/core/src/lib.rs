//! Tensor circuit encoding and state-vector simulation.

pub mod bench;
pub mod generators;
pub mod ir;
pub mod partition;
pub mod qasm;
pub mod qcrank;
pub mod rng;
pub mod statevec;

//! Golden QASM corpus in `tests/qasm_corpus`. Each `NAME.qasm` has a
//! `NAME.expected` holding the rendered parse result: a `qubits N` line and
//! one line per gate when a circuit is produced, then one line per
//! diagnostic.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use qgear_core::generators::{build_qft, QftSpec};
use qgear_core::ir::{CircType, GateList, GateRecord};
use qgear_core::qasm::ParseOutput;

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/qasm_corpus")
}

pub fn render(out: &ParseOutput) -> String {
    let mut s = String::new();
    if let Some(c) = &out.circuit {
        s.push_str(&format!("qubits {}\n", c.n_qubits));
        for g in &c.gates {
            s.push_str(&format!("{g}\n"));
        }
    }
    for d in &out.diagnostics {
        s.push_str(&format!("{d}\n"));
    }
    s
}

pub fn corpus() -> Vec<(String, String)> {
    let mut files: Vec<PathBuf> = fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "qasm"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_stem().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap()))
        .collect()
}

/// Circuits written directly with the IR for every file that should parse.
pub fn hand_built(name: &str) -> Option<GateList> {
    let g = |n, gates| Some(GateList::new(CircType::Imported, n, gates));
    match name {
        "01_bell" => g(2, vec![GateRecord::h(0), GateRecord::cx(0, 1), GateRecord::measure(0), GateRecord::measure(1)]),
        "02_ghz4" => g(
            4,
            vec![
                GateRecord::h(0),
                GateRecord::cx(0, 1),
                GateRecord::cx(1, 2),
                GateRecord::cx(2, 3),
                GateRecord::measure(0),
                GateRecord::measure(3),
            ],
        ),
        "03_angle_expressions" => g(
            2,
            vec![
                GateRecord::rx(0, PI / 2.0),
                GateRecord::ry(1, -PI / 4.0),
                GateRecord::rz(0, 2.0 * (PI - 1.0) / 3.0),
                GateRecord::ry(1, 0.25),
            ],
        ),
        "04_broadcast" => g(
            3,
            vec![
                GateRecord::h(0),
                GateRecord::h(1),
                GateRecord::h(2),
                GateRecord::rz(0, PI / 8.0),
                GateRecord::rz(1, PI / 8.0),
                GateRecord::rz(2, PI / 8.0),
            ],
        ),
        "05_x_gate" => g(2, vec![GateRecord::rx(1, PI), GateRecord::measure(1)]),
        "06_controlled_phase" => g(3, vec![GateRecord::h(2), GateRecord::cr1(2, 0, PI / 2.0), GateRecord::cr1(0, 1, PI / 4.0)]),
        "07_comments" => g(2, vec![GateRecord::cx(1, 0), GateRecord::h(1)]),
        "08_barrier" => g(2, vec![GateRecord::h(0), GateRecord::h(1)]),
        "09_qft3" => Some(GateList { circ_type: CircType::Imported, ..build_qft(&QftSpec { n_qubits: 3, reversed: false }).unwrap() }),
        "10_foreign_include" => g(1, vec![GateRecord::h(0)]),
        "11_scientific_numbers" => g(1, vec![GateRecord::rx(0, 0.15), GateRecord::ry(0, -2.5), GateRecord::rz(0, 3.0)]),
        _ => None,
    }
}

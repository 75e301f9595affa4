//! Dense-matrix reference simulator shared by the integration tests.
//!
//! Every gate is expanded to a full `2^n x 2^n` matrix by Kronecker
//! products, with qubit `n-1` as the leftmost factor so that qubit `k`
//! maps to bit `k` of the row index. Controlled gates use
//! `|0⟩⟨0|_c ⊗ I + |1⟩⟨1|_c ⊗ U_t`.

#![allow(dead_code)]

pub mod corpus;

use num_complex::Complex64 as C;
use qgear_core::ir::{GateKind, GateRecord};
use qgear_core::rng::SimRng;

pub type Matrix = Vec<Vec<C>>;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn identity(d: usize) -> Matrix {
    (0..d).map(|i| (0..d).map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect()).collect()
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn add(a: &Matrix, b: &Matrix) -> Matrix {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect()).collect()
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut out = vec![vec![c(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            let x = a[i][k];
            if x == c(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                out[i][j] += x * b[k][j];
            }
        }
    }
    out
}

pub fn apply(m: &Matrix, v: &[C]) -> Vec<C> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// 2x2 matrix of a single-qubit kind, written out from the textbook
/// half-angle definitions.
pub fn single(kind: GateKind, theta: f64) -> Matrix {
    let (co, si) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let r = std::f64::consts::FRAC_1_SQRT_2;
    match kind {
        GateKind::H => vec![vec![c(r, 0.0), c(r, 0.0)], vec![c(r, 0.0), c(-r, 0.0)]],
        GateKind::Rx => vec![vec![c(co, 0.0), c(0.0, -si)], vec![c(0.0, -si), c(co, 0.0)]],
        GateKind::Ry => vec![vec![c(co, 0.0), c(-si, 0.0)], vec![c(si, 0.0), c(co, 0.0)]],
        GateKind::Rz => vec![vec![C::from_polar(1.0, -theta / 2.0), c(0.0, 0.0)], vec![c(0.0, 0.0), C::from_polar(1.0, theta / 2.0)]],
        other => panic!("{other} is not a single-qubit kind"),
    }
}

/// Kronecker product over all qubits with `ops[k]` acting on qubit k.
fn kron_all(ops: &[Matrix]) -> Matrix {
    let mut m = vec![vec![c(1.0, 0.0)]];
    for op in ops.iter().rev() {
        m = kron(&m, op);
    }
    m
}

pub fn full_matrix(g: &GateRecord, n: usize) -> Matrix {
    let id = identity(2);
    match g.kind {
        GateKind::Measure => identity(1 << n),
        GateKind::Cx | GateKind::Cr1 => {
            let ctl = g.control.expect("two-qubit gate");
            let u = if g.kind == GateKind::Cx {
                vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]]
            } else {
                vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), C::from_polar(1.0, g.param)]]
            };
            let p0 = vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]];
            let p1 = vec![vec![c(0.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]];
            let mut off = vec![id.clone(); n];
            off[ctl] = p0;
            let mut on = vec![id.clone(); n];
            on[ctl] = p1;
            on[g.target] = u;
            add(&kron_all(&off), &kron_all(&on))
        }
        kind => {
            let mut ops = vec![id; n];
            ops[g.target] = single(kind, g.param);
            kron_all(&ops)
        }
    }
}

/// Runs `gates` on `state` through the dense matrices.
pub fn oracle_run(gates: &[GateRecord], n: usize, state: &[C]) -> Vec<C> {
    gates.iter().fold(state.to_vec(), |s, g| apply(&full_matrix(g, n), &s))
}

pub fn zero_state(n: usize) -> Vec<C> {
    let mut v = vec![c(0.0, 0.0); 1 << n];
    v[0] = c(1.0, 0.0);
    v
}

pub fn random_state(n: usize, rng: &mut SimRng) -> Vec<C> {
    let v: Vec<C> = (0..1 << n).map(|_| c(rng.unit_f64() - 0.5, rng.unit_f64() - 0.5)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

pub fn random_gate(n: usize, rng: &mut SimRng) -> GateRecord {
    let kinds = [GateKind::H, GateKind::Rx, GateKind::Ry, GateKind::Rz, GateKind::Cx, GateKind::Cr1];
    let kind = kinds[rng.below(kinds.len() as u64) as usize];
    let theta = (rng.unit_f64() - 0.5) * 4.0 * std::f64::consts::PI;
    let t = rng.below(n as u64) as usize;
    match kind {
        GateKind::Cx | GateKind::Cr1 => {
            let mut ctl = rng.below(n as u64 - 1) as usize;
            if ctl >= t {
                ctl += 1;
            }
            if kind == GateKind::Cx {
                GateRecord::cx(ctl, t)
            } else {
                GateRecord::cr1(ctl, t, theta)
            }
        }
        k => GateRecord { kind: k, control: None, target: t, param: theta },
    }
}

pub fn max_abs_diff(a: &[C], b: &[C]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Bit reversal of `x` over `bits` bits.
pub fn bit_reverse(x: usize, bits: usize) -> usize {
    (0..bits).fold(0, |acc, k| acc | (((x >> k) & 1) << (bits - 1 - k)))
}

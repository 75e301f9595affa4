//! Grayscale image encoding with uniformly controlled RY rotations.
//!
//! Pixel `p` becomes `v = 2p/255 − 1` and angle `θ = arccos v`, so
//! measuring the data qubit after `RY(θ)|0⟩` gives `⟨Z⟩ = v`. Pixels fill
//! `(group, lane)` slots in row-major order: pixel `k` goes to group
//! `k / n_data` and lane `k mod n_data`. A group is stored at the address
//! whose `m` bits are the group's bits reversed.
//!
//! Qubits `0..m` hold the address, qubits `m..m + n_data` the data lanes.
//! Every data lane gets one uniformly controlled RY over the address
//! register, built from `2^m` RY and `2^m` CX gates in Gray-code order.

mod pgm;

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{CircType, CircuitSet, CircuitTensor, GateList, GateRecord, IrError};
use crate::statevec::{parse_label, CountsTable};
pub use pgm::ImageGray;

pub const DEFAULT_SHOTS_PER_ADDRESS: u64 = 3000;

#[derive(Debug, Error)]
pub enum QCrankError {
    #[error("plan holds {capacity} pixels, image has {pixels}")]
    PlanTooSmall { pixels: usize, capacity: usize },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("count key {0:?} does not match the plan")]
    BadCountKey(String),
    #[error("{0}")]
    Image(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Ir(#[from] IrError),
}

/// Encoding layout for one image size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QCrankPlan {
    pub n_addr: usize,
    pub n_data: usize,
    pub width: usize,
    pub height: usize,
    /// Shots per address.
    pub s: u64,
}

impl QCrankPlan {
    pub fn new(n_addr: usize, n_data: usize, width: usize, height: usize) -> Result<Self, QCrankError> {
        let plan = QCrankPlan { n_addr, n_data, width, height, s: DEFAULT_SHOTS_PER_ADDRESS };
        plan.check()?;
        Ok(plan)
    }

    pub fn for_image(image: &ImageGray, n_addr: usize, n_data: usize) -> Result<Self, QCrankError> {
        Self::new(n_addr, n_data, image.width(), image.height())
    }

    pub fn with_shots_per_address(mut self, s: u64) -> Self {
        self.s = s;
        self
    }

    pub fn check(&self) -> Result<(), QCrankError> {
        if self.n_addr == 0 || self.n_data == 0 {
            return Err(QCrankError::InvalidPlan("need at least one address and one data qubit".into()));
        }
        if self.n_addr + self.n_data >= 60 {
            return Err(QCrankError::InvalidPlan(format!("{} qubits is beyond any simulator", self.n_addr + self.n_data)));
        }
        let pixels = self.width * self.height;
        if pixels == 0 {
            return Err(QCrankError::InvalidPlan("empty image".into()));
        }
        if self.padded_len() < pixels {
            return Err(QCrankError::PlanTooSmall { pixels, capacity: self.padded_len() });
        }
        Ok(())
    }

    pub fn n_addresses(&self) -> usize {
        1 << self.n_addr
    }

    /// Slot count `2^m · n_data`.
    pub fn padded_len(&self) -> usize {
        self.n_addresses() * self.n_data
    }

    pub fn n_pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn n_qubits(&self) -> usize {
        self.n_addr + self.n_data
    }

    /// Total shot budget `s · 2^m`.
    pub fn shots(&self) -> u64 {
        self.s << self.n_addr
    }

    /// Address of pixel group `g`.
    pub fn address_of_group(&self, g: usize) -> usize {
        reverse_bits(g, self.n_addr)
    }
}

pub fn reverse_bits(x: usize, bits: usize) -> usize {
    if bits == 0 {
        return 0;
    }
    x.reverse_bits() >> (usize::BITS as usize - bits)
}

pub fn pixel_to_unit(p: u8) -> f64 {
    2.0 * p as f64 / 255.0 - 1.0
}

pub fn unit_to_pixel(v: f64) -> u8 {
    (255.0 * (v.clamp(-1.0, 1.0) + 1.0) / 2.0).round() as u8
}

/// Angles indexed `[address][lane]`, radians in `[0, π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleTensor {
    pub n_addr: usize,
    pub n_data: usize,
    pub values: Vec<Vec<f64>>,
}

impl AngleTensor {
    /// Angles of one lane across all addresses.
    pub fn column(&self, lane: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[lane]).collect()
    }
}

pub fn prepare_angles(image: &ImageGray, n_addr: usize, n_data: usize) -> Result<AngleTensor, QCrankError> {
    let plan = QCrankPlan::for_image(image, n_addr, n_data)?;
    let mut values = vec![vec![FRAC_PI_2; n_data]; plan.n_addresses()];
    for (k, &p) in image.pixels().iter().enumerate() {
        let a = plan.address_of_group(k / n_data);
        values[a][k % n_data] = pixel_to_unit(p).acos();
    }
    Ok(AngleTensor { n_addr, n_data, values })
}

fn gray(k: usize) -> usize {
    k ^ (k >> 1)
}

/// In-place unnormalized Walsh–Hadamard transform; length must be 2^m.
fn walsh_hadamard(x: &mut [f64]) {
    let n = x.len();
    let mut h = 1;
    while h < n {
        for block in x.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*a, *b);
                *a = u + v;
                *b = u - v;
            }
        }
        h *= 2;
    }
}

/// Rotation angles `φ` for the Gray-code sequence realizing per-address
/// angles `θ`: `φ_k = 2^−m · WHT(θ)[gray(k)]`.
pub fn gray_walsh_forward(theta: &[f64]) -> Vec<f64> {
    assert!(theta.len().is_power_of_two());
    let mut w = theta.to_vec();
    walsh_hadamard(&mut w);
    let scale = 1.0 / theta.len() as f64;
    (0..theta.len()).map(|k| w[gray(k)] * scale).collect()
}

/// Inverse of [`gray_walsh_forward`].
pub fn gray_walsh_inverse(phi: &[f64]) -> Vec<f64> {
    assert!(phi.len().is_power_of_two());
    let mut w = vec![0.0; phi.len()];
    for (k, &p) in phi.iter().enumerate() {
        w[gray(k)] = p;
    }
    walsh_hadamard(&mut w);
    w
}

/// Address bit flipped between Gray steps `k` and `k + 1` (wrapping).
fn gray_change_bit(k: usize, m: usize) -> usize {
    if k + 1 == 1 << m {
        m - 1
    } else {
        (k + 1).trailing_zeros() as usize
    }
}

/// H on every address qubit, one uniformly controlled RY per lane, then a
/// MEASURE on every qubit.
pub fn build_qcrank_circuit(angles: &AngleTensor) -> GateList {
    let m = angles.n_addr;
    let n = m + angles.n_data;
    let k_len = 1usize << m;
    let mut gates = Vec::with_capacity(m + angles.n_data * 2 * k_len + n);
    gates.extend((0..m).map(GateRecord::h));
    for lane in 0..angles.n_data {
        let target = m + lane;
        let phi = gray_walsh_forward(&angles.column(lane));
        for (k, &p) in phi.iter().enumerate() {
            gates.push(GateRecord::ry(target, p));
            gates.push(GateRecord::cx(gray_change_bit(k, m), target));
        }
    }
    gates.extend((0..n).map(GateRecord::measure));
    GateList::new(CircType::QCrank, n, gates)
}

/// One circuit per image, all with the same plan shape.
pub fn build_batch(images: &[ImageGray], n_addr: usize, n_data: usize) -> Result<CircuitSet, QCrankError> {
    let tensors = images
        .iter()
        .map(|img| Ok(CircuitTensor::from_gate_list(&build_qcrank_circuit(&prepare_angles(img, n_addr, n_data)?))?))
        .collect::<Result<Vec<_>, QCrankError>>()?;
    Ok(CircuitSet::from_tensors(tensors)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionReport {
    /// `v̂` per image pixel, row-major.
    pub estimates: Vec<f64>,
    /// Pearson correlation against the source; `None` without a source.
    pub correlation: Option<f64>,
    pub mse: Option<f64>,
    pub max_abs_error: Option<f64>,
    /// Largest difference in gray levels after rounding.
    pub max_gray_error: Option<u8>,
    /// Addresses that received no probability mass or shots; their
    /// estimates are 0.
    pub empty_addresses: Vec<usize>,
}

/// Per-address, per-lane `(n₀, n₁)` tallies.
struct Tally {
    zero: Vec<Vec<f64>>,
    one: Vec<Vec<f64>>,
}

impl Tally {
    fn new(plan: &QCrankPlan) -> Self {
        Tally { zero: vec![vec![0.0; plan.n_data]; plan.n_addresses()], one: vec![vec![0.0; plan.n_data]; plan.n_addresses()] }
    }

    fn add(&mut self, plan: &QCrankPlan, index: usize, weight: f64) {
        let a = index & (plan.n_addresses() - 1);
        for d in 0..plan.n_data {
            if (index >> (plan.n_addr + d)) & 1 == 1 {
                self.one[a][d] += weight;
            } else {
                self.zero[a][d] += weight;
            }
        }
    }

    fn finish(self, plan: &QCrankPlan, source: Option<&ImageGray>) -> Result<(ReconstructionReport, ImageGray), QCrankError> {
        let mut empty = Vec::new();
        let mut per_slot = vec![vec![0.0; plan.n_data]; plan.n_addresses()];
        for (a, slot) in per_slot.iter_mut().enumerate() {
            let (zero, one) = (&self.zero[a], &self.one[a]);
            // lanes share the address marginal, so lane 0 decides emptiness
            let total = zero[0] + one[0];
            if total <= 0.0 {
                empty.push(a);
                continue;
            }
            for (d, v) in slot.iter_mut().enumerate() {
                *v = ((zero[d] - one[d]) / total).clamp(-1.0, 1.0);
            }
        }
        let estimates: Vec<f64> = (0..plan.n_pixels())
            .map(|k| per_slot[plan.address_of_group(k / plan.n_data)][k % plan.n_data])
            .collect();
        let image = ImageGray::new(plan.width, plan.height, estimates.iter().map(|&v| unit_to_pixel(v)).collect())?;
        let mut report = ReconstructionReport {
            estimates,
            correlation: None,
            mse: None,
            max_abs_error: None,
            max_gray_error: None,
            empty_addresses: empty,
        };
        if let Some(src) = source {
            if src.len() != plan.n_pixels() {
                return Err(QCrankError::LengthMismatch { expected: plan.n_pixels(), got: src.len() });
            }
            let truth: Vec<f64> = src.pixels().iter().map(|&p| pixel_to_unit(p)).collect();
            let errs = report.estimates.iter().zip(&truth).map(|(e, t)| (e - t).abs());
            report.max_abs_error = Some(errs.clone().fold(0.0, f64::max));
            report.mse = Some(errs.map(|e| e * e).sum::<f64>() / truth.len() as f64);
            report.correlation = Some(correlation(&report.estimates, &truth));
            report.max_gray_error =
                image.pixels().iter().zip(src.pixels()).map(|(a, b)| a.abs_diff(*b)).max();
        }
        Ok((report, image))
    }
}

/// Pearson correlation. With zero variance on either side it is 1 when the
/// sequences are identical and 0 otherwise.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return if x == y { 1.0 } else { 0.0 };
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Estimates pixels from sampled counts. Keys must have `m + n_data` bits.
pub fn decode_counts(
    counts: &CountsTable,
    plan: &QCrankPlan,
    source: Option<&ImageGray>,
) -> Result<(ReconstructionReport, ImageGray), QCrankError> {
    plan.check()?;
    let mut tally = Tally::new(plan);
    for (key, &n) in &counts.counts {
        if key.len() != plan.n_qubits() {
            return Err(QCrankError::BadCountKey(key.clone()));
        }
        let index = parse_label(key).ok_or_else(|| QCrankError::BadCountKey(key.clone()))?;
        tally.add(plan, index, n as f64);
    }
    tally.finish(plan, source)
}

/// Same estimator on exact basis probabilities (length `2^(m + n_data)`).
pub fn decode_exact(
    probabilities: &[f64],
    plan: &QCrankPlan,
    source: Option<&ImageGray>,
) -> Result<(ReconstructionReport, ImageGray), QCrankError> {
    plan.check()?;
    let expected = 1usize << plan.n_qubits();
    if probabilities.len() != expected {
        return Err(QCrankError::LengthMismatch { expected, got: probabilities.len() });
    }
    let mut tally = Tally::new(plan);
    for (i, &p) in probabilities.iter().enumerate() {
        tally.add(plan, i, p);
    }
    tally.finish(plan, source)
}

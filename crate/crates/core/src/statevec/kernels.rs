//! Strided in-place gate kernels.
//!
//! Every kernel works on a slice of amplitudes whose global basis index is
//! `base + local index`. A full state vector is the case `base == 0`; the
//! partitioned simulator passes one worker's chunk. Pair updates are disjoint,
//! so the parallel and sequential paths produce bitwise identical results.

use std::fmt::Debug;

use num_complex::Complex;
use num_traits::Float;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::ir::GateKind;

/// Scalar type of an amplitude component.
pub trait Real: Float + Send + Sync + Debug + 'static {
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
}

/// Which kernel implementation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Sequential,
    /// Rayon-parallel kernels. Falls back to sequential when the crate is
    /// built without the `parallel` feature.
    Parallel,
}

impl Default for Backend {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Backend::Parallel
        } else {
            Backend::Sequential
        }
    }
}

/// Below this many amplitudes the parallel backend still runs sequentially.
pub const PAR_MIN_LEN: usize = 1 << 14;
/// Work unit handed to one rayon task.
#[cfg(feature = "parallel")]
const GRAIN: usize = 1 << 12;

impl Backend {
    fn use_parallel(self, len: usize) -> bool {
        cfg!(feature = "parallel") && self == Backend::Parallel && len >= PAR_MIN_LEN
    }
}

/// A 2x2 single-qubit operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mat2<T> {
    Dense([[Complex<T>; 2]; 2]),
    Diagonal(Complex<T>, Complex<T>),
}

impl<T: Real> Mat2<T> {
    /// New amplitude of the bit-0 member of a pair.
    #[inline(always)]
    pub fn lo(&self, a: Complex<T>, b: Complex<T>) -> Complex<T> {
        match self {
            Mat2::Dense(m) => m[0][0] * a + m[0][1] * b,
            Mat2::Diagonal(d0, _) => *d0 * a,
        }
    }

    /// New amplitude of the bit-1 member of a pair.
    #[inline(always)]
    pub fn hi(&self, a: Complex<T>, b: Complex<T>) -> Complex<T> {
        match self {
            Mat2::Dense(m) => m[1][0] * a + m[1][1] * b,
            Mat2::Diagonal(_, d1) => *d1 * b,
        }
    }

    pub fn to_dense(&self) -> [[Complex<T>; 2]; 2] {
        match *self {
            Mat2::Dense(m) => m,
            Mat2::Diagonal(d0, d1) => {
                let z = Complex::new(T::zero(), T::zero());
                [[d0, z], [z, d1]]
            }
        }
    }

    fn cast<U: Real>(&self) -> Mat2<U> {
        let c = |z: &Complex<T>| Complex::new(U::from_f64(z.re.to_f64()), U::from_f64(z.im.to_f64()));
        match self {
            Mat2::Dense(m) => Mat2::Dense([[c(&m[0][0]), c(&m[0][1])], [c(&m[1][0]), c(&m[1][1])]]),
            Mat2::Diagonal(a, b) => Mat2::Diagonal(c(a), c(b)),
        }
    }
}

/// Half-angle rotation matrices, built in f64 and rounded once to `T`.
/// Returns `None` for kinds that are not single-qubit unitaries.
pub fn single_qubit_matrix<T: Real>(kind: GateKind, theta: f64) -> Option<Mat2<T>> {
    let c = |re: f64, im: f64| Complex::new(re, im);
    let (cos, sin) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let m: Mat2<f64> = match kind {
        GateKind::H => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            Mat2::Dense([[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]])
        }
        GateKind::Rx => Mat2::Dense([[c(cos, 0.0), c(0.0, -sin)], [c(0.0, -sin), c(cos, 0.0)]]),
        GateKind::Ry => Mat2::Dense([[c(cos, 0.0), c(-sin, 0.0)], [c(sin, 0.0), c(cos, 0.0)]]),
        GateKind::Rz => Mat2::Diagonal(c(cos, -sin), c(cos, sin)),
        GateKind::Cx | GateKind::Cr1 | GateKind::Measure => return None,
    };
    Some(m.cast())
}

/// `e^{iλ}` rounded to `T`.
pub fn phase<T: Real>(lambda: f64) -> Complex<T> {
    Complex::new(T::from_f64(lambda.cos()), T::from_f64(lambda.sin()))
}

/// Calls `f(local_index_of_lo, lo, hi)` for every amplitude pair
/// `(i, i + stride)` with the stride bit of `i` clear.
#[inline]
#[cfg_attr(not(feature = "parallel"), allow(clippy::needless_return))]
fn for_each_pair<T, F>(amps: &mut [T], stride: usize, backend: Backend, f: F)
where
    T: Send,
    F: Fn(usize, &mut T, &mut T) + Send + Sync,
{
    debug_assert!(stride.is_power_of_two() && 2 * stride <= amps.len());
    let block = 2 * stride;
    if !backend.use_parallel(amps.len()) {
        for (b, chunk) in amps.chunks_mut(block).enumerate() {
            let (lo, hi) = chunk.split_at_mut(stride);
            let off = b * block;
            for (j, (l, h)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                f(off + j, l, h);
            }
        }
        return;
    }
    #[cfg(feature = "parallel")]
    {
        if stride >= GRAIN {
            for (b, chunk) in amps.chunks_mut(block).enumerate() {
                let (lo, hi) = chunk.split_at_mut(stride);
                let off = b * block;
                lo.par_chunks_mut(GRAIN).zip(hi.par_chunks_mut(GRAIN)).enumerate().for_each(|(k, (l, h))| {
                    let start = off + k * GRAIN;
                    for (j, (x, y)) in l.iter_mut().zip(h.iter_mut()).enumerate() {
                        f(start + j, x, y);
                    }
                });
            }
        } else {
            // several whole blocks per task
            let per_task = (GRAIN / block).max(1) * block;
            amps.par_chunks_mut(per_task).enumerate().for_each(|(t, task)| {
                for (b, chunk) in task.chunks_mut(block).enumerate() {
                    let (lo, hi) = chunk.split_at_mut(stride);
                    let off = t * per_task + b * block;
                    for (j, (l, h)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                        f(off + j, l, h);
                    }
                }
            });
        }
    }
}

/// Calls `f(local_index, amp)` for every amplitude.
#[inline]
#[cfg_attr(not(feature = "parallel"), allow(clippy::needless_return))]
fn for_each_amp<T, F>(amps: &mut [T], backend: Backend, f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Send + Sync,
{
    if !backend.use_parallel(amps.len()) {
        for (i, a) in amps.iter_mut().enumerate() {
            f(i, a);
        }
        return;
    }
    #[cfg(feature = "parallel")]
    amps.par_chunks_mut(GRAIN).enumerate().for_each(|(k, chunk)| {
        for (j, a) in chunk.iter_mut().enumerate() {
            f(k * GRAIN + j, a);
        }
    });
}

/// Applies `m` to local qubit `target` (stride `2^target < amps.len()`).
pub fn apply_mat<T: Real>(amps: &mut [Complex<T>], target: usize, m: &Mat2<T>, backend: Backend) {
    let m = *m;
    for_each_pair(amps, 1 << target, backend, move |_, lo, hi| {
        let (a, b) = (*lo, *hi);
        *lo = m.lo(a, b);
        *hi = m.hi(a, b);
    });
}

/// CX with a local target. The control bit is read from the global index
/// `base + i`, so a control outside the slice works too.
pub fn apply_cx<T: Real>(amps: &mut [Complex<T>], base: usize, control: usize, target: usize, backend: Backend) {
    let cmask = 1usize << control;
    if (1usize << control) >= amps.len() {
        // control is constant across the slice
        if base & cmask == 0 {
            return;
        }
        for_each_pair(amps, 1 << target, backend, |_, lo, hi| std::mem::swap(lo, hi));
        return;
    }
    for_each_pair(amps, 1 << target, backend, move |i, lo, hi| {
        if (base + i) & cmask != 0 {
            std::mem::swap(lo, hi);
        }
    });
}

/// Multiplies every amplitude with both bits set by `e^{iλ}`. Works for any
/// qubit positions relative to the slice.
pub fn apply_cr1<T: Real>(amps: &mut [Complex<T>], base: usize, control: usize, target: usize, lambda: f64, backend: Backend) {
    let mask = (1usize << control) | (1usize << target);
    let ph = phase::<T>(lambda);
    let len = amps.len();
    if base & mask & !(len - 1) != mask & !(len - 1) {
        // a non-local bit is clear for the whole slice
        return;
    }
    for_each_amp(amps, backend, move |i, a| {
        if (base + i) & mask == mask {
            *a = *a * ph;
        }
    });
}

/// Σ|α|² accumulated in f64, in index order.
pub fn norm_sqr<T: Real>(amps: &[Complex<T>]) -> f64 {
    amps.iter().map(|a| a.re.to_f64() * a.re.to_f64() + a.im.to_f64() * a.im.to_f64()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn ramp(n: usize) -> Vec<Complex64> {
        (0..1usize << n).map(|i| Complex64::new(i as f64, -(i as f64) * 0.5)).collect()
    }

    #[test]
    fn pairs_visit_every_index_once() {
        for n in 1..6 {
            for t in 0..n {
                let mut v: Vec<usize> = (0..1 << n).collect();
                let seen = std::sync::Mutex::new(Vec::new());
                for_each_pair(&mut v, 1 << t, Backend::Sequential, |i, lo, hi| {
                    assert_eq!(*lo, i);
                    assert_eq!(*hi, i + (1 << t));
                    assert_eq!(i & (1 << t), 0);
                    seen.lock().unwrap().push(i);
                });
                assert_eq!(seen.into_inner().unwrap().len(), 1 << (n - 1));
            }
        }
    }

    #[test]
    fn backends_agree_bitwise() {
        let n = 16;
        for t in [0, 3, 12, 15] {
            let m = single_qubit_matrix::<f64>(GateKind::Ry, 0.37).unwrap();
            let mut a = ramp(n);
            let mut b = ramp(n);
            apply_mat(&mut a, t, &m, Backend::Sequential);
            apply_mat(&mut b, t, &m, Backend::Parallel);
            assert_eq!(a, b);
            apply_cx(&mut a, 0, (t + 5) % n, t, Backend::Sequential);
            apply_cx(&mut b, 0, (t + 5) % n, t, Backend::Parallel);
            assert_eq!(a, b);
            apply_cr1(&mut a, 0, (t + 1) % n, t, 0.9, Backend::Sequential);
            apply_cr1(&mut b, 0, (t + 1) % n, t, 0.9, Backend::Parallel);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn cx_with_control_outside_slice() {
        // chunk of 4 amplitudes standing at global offset 8 (bit 3 set)
        let mut chunk = ramp(2);
        apply_cx(&mut chunk, 8, 3, 0, Backend::Sequential);
        assert_eq!(chunk[0], ramp(2)[1]);
        let mut chunk = ramp(2);
        apply_cx(&mut chunk, 0, 3, 0, Backend::Sequential);
        assert_eq!(chunk, ramp(2));
    }

    #[test]
    fn cr1_with_nonlocal_bits() {
        let mut chunk = ramp(2);
        apply_cr1(&mut chunk, 4, 2, 0, std::f64::consts::PI, Backend::Sequential);
        let want = ramp(2);
        assert_eq!(chunk[0], want[0]);
        assert!((chunk[1] + want[1]).norm() < 1e-15);
        let mut chunk = ramp(2);
        apply_cr1(&mut chunk, 0, 2, 0, std::f64::consts::PI, Backend::Sequential);
        assert_eq!(chunk, ramp(2));
    }
}

//! On-disk containers for [`CircuitSet`].
//!
//! Two layouts carry the same fields: HDF5 (feature `hdf5`) and a flat
//! little-endian binary file:
//!
//! ```text
//! magic       b"QGIR1"
//! version     u32            always 1
//! capacity    u64            d
//! n_circ      u64            |C|
//! circ_type   n_circ*3 i32   (circ_type, n_qubits, n_gates)
//! gate_type   n_circ*d*3 i32 (kind_id, control or -1, target)
//! gate_param  n_circ*d f64
//! n_meta      u32
//! n_meta x    { key_len u32, key utf8, value_len u32, value utf8 }  sorted by key
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

use super::{CircType, CircuitHeader, CircuitSet, CircuitTensor, IrError};

pub const BINARY_MAGIC: &[u8; 5] = b"QGIR1";
pub const HDF5_MAGIC: &[u8; 8] = b"\x89HDF\r\n\x1a\n";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unrecognized container (no QGIR1 or HDF5 signature)")]
    BadMagic,
    #[error("unsupported container version {0}")]
    UnsupportedVersion(String),
    #[error("container truncated while reading {0}")]
    Truncated(&'static str),
    #[error("malformed container: {0}")]
    Malformed(String),
    #[error(transparent)]
    Ir(#[from] IrError),
    #[error("hdf5: {0}")]
    Hdf5(String),
    #[error("this build has no HDF5 support (enable the `hdf5` feature)")]
    Hdf5Unavailable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Binary,
    Hdf5,
}

impl Format {
    /// `.h5` / `.hdf5` select HDF5, anything else the binary layout.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("h5") || e.eq_ignore_ascii_case("hdf5") => Format::Hdf5,
            _ => Format::Binary,
        }
    }
}

/// Writes `set` in the format implied by the file extension.
pub fn write_container(path: &Path, set: &CircuitSet) -> Result<(), ContainerError> {
    write_container_as(path, set, Format::from_path(path))
}

pub fn write_container_as(path: &Path, set: &CircuitSet, format: Format) -> Result<(), ContainerError> {
    check_shape(set)?;
    match format {
        Format::Binary => Ok(fs::write(path, encode_binary(set))?),
        #[cfg(feature = "hdf5")]
        Format::Hdf5 => super::hdf5::write(path, set),
        #[cfg(not(feature = "hdf5"))]
        Format::Hdf5 => Err(ContainerError::Hdf5Unavailable),
    }
}

/// Reads a container, detecting the layout from its signature.
pub fn read_container(path: &Path) -> Result<CircuitSet, ContainerError> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(BINARY_MAGIC) {
        decode_binary(&bytes)
    } else if bytes.starts_with(HDF5_MAGIC) {
        #[cfg(feature = "hdf5")]
        {
            super::hdf5::read(path)
        }
        #[cfg(not(feature = "hdf5"))]
        {
            Err(ContainerError::Hdf5Unavailable)
        }
    } else {
        Err(ContainerError::BadMagic)
    }
}

fn check_shape(set: &CircuitSet) -> Result<(), ContainerError> {
    for (i, c) in set.circuits.iter().enumerate() {
        if c.gate_type.len() != set.capacity || c.gate_param.len() != set.capacity {
            return Err(ContainerError::Malformed(format!(
                "circuit {i} has {} rows, set capacity is {}",
                c.gate_type.len(),
                set.capacity
            )));
        }
    }
    Ok(())
}

pub fn encode_binary(set: &CircuitSet) -> Vec<u8> {
    let d = set.capacity;
    let mut out = Vec::with_capacity(32 + set.circuits.len() * (12 + d * 20));
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(d as u64).to_le_bytes());
    out.extend_from_slice(&(set.circuits.len() as u64).to_le_bytes());
    for c in &set.circuits {
        for v in c.header.row() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    for c in &set.circuits {
        for row in &c.gate_type {
            for v in row {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    for c in &set.circuits {
        for p in &c.gate_param {
            out.extend_from_slice(&p.to_le_bytes());
        }
    }
    out.extend_from_slice(&(set.metadata.len() as u32).to_le_bytes());
    for (k, v) in &set.metadata {
        for s in [k, v] {
            out.extend_from_slice(&(s.len() as u32).to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], ContainerError> {
        let end = self.pos.checked_add(n).ok_or(ContainerError::Truncated(what))?;
        let s = self.bytes.get(self.pos..end).ok_or(ContainerError::Truncated(what))?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, ContainerError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64, ContainerError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn i32(&mut self, what: &'static str) -> Result<i32, ContainerError> {
        Ok(i32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &'static str) -> Result<f64, ContainerError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn string(&mut self, what: &'static str) -> Result<String, ContainerError> {
        let len = self.u32(what)? as usize;
        let raw = self.take(len, what)?;
        String::from_utf8(raw.to_vec()).map_err(|_| ContainerError::Malformed(format!("{what} is not utf-8")))
    }
}

pub fn decode_binary(bytes: &[u8]) -> Result<CircuitSet, ContainerError> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(BINARY_MAGIC.len(), "magic")? != BINARY_MAGIC {
        return Err(ContainerError::BadMagic);
    }
    let version = cur.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(ContainerError::UnsupportedVersion(version.to_string()));
    }
    let capacity = usize::try_from(cur.u64("capacity")?)
        .map_err(|_| ContainerError::Malformed("capacity overflows usize".into()))?;
    let n_circ = usize::try_from(cur.u64("n_circ")?)
        .map_err(|_| ContainerError::Malformed("n_circ overflows usize".into()))?;
    // every circuit needs at least a header row; reject absurd counts before allocating
    let min_len = n_circ
        .checked_mul(12 + capacity.saturating_mul(20))
        .ok_or(ContainerError::Truncated("circ_type"))?;
    if bytes.len() < min_len {
        return Err(ContainerError::Truncated("circ_type"));
    }

    let mut headers = Vec::with_capacity(n_circ);
    for _ in 0..n_circ {
        let row = [cur.i32("circ_type")?, cur.i32("circ_type")?, cur.i32("circ_type")?];
        headers.push(row);
    }
    let mut gate_types = Vec::with_capacity(n_circ);
    for _ in 0..n_circ {
        let mut rows = Vec::with_capacity(capacity);
        for _ in 0..capacity {
            rows.push([cur.i32("gate_type")?, cur.i32("gate_type")?, cur.i32("gate_type")?]);
        }
        gate_types.push(rows);
    }
    let mut params = Vec::with_capacity(n_circ);
    for _ in 0..n_circ {
        params.push((0..capacity).map(|_| cur.f64("gate_param")).collect::<Result<Vec<_>, _>>()?);
    }
    let n_meta = cur.u32("n_meta")?;
    let mut metadata = BTreeMap::new();
    for _ in 0..n_meta {
        let k = cur.string("meta key")?;
        let v = cur.string("meta value")?;
        metadata.insert(k, v);
    }
    if cur.pos != bytes.len() {
        return Err(ContainerError::Malformed(format!("{} trailing bytes", bytes.len() - cur.pos)));
    }
    assemble(capacity, headers, gate_types, params, metadata)
}

/// Builds a set from raw arrays, checking the header columns.
pub(crate) fn assemble(
    capacity: usize,
    headers: Vec<[i32; 3]>,
    gate_types: Vec<Vec<[i32; 3]>>,
    params: Vec<Vec<f64>>,
    metadata: BTreeMap<String, String>,
) -> Result<CircuitSet, ContainerError> {
    let circuits = headers
        .into_iter()
        .zip(gate_types)
        .zip(params)
        .enumerate()
        .map(|(i, ((h, gate_type), gate_param))| {
            let bad = |reason: String| IrError::CorruptTensor { circuit: i, gate: 0, reason };
            let circ_type = CircType::from_id(h[0]).ok_or_else(|| bad(format!("unknown circ_type {}", h[0])))?;
            if h[1] < 0 || h[2] < 0 {
                return Err(bad(format!("negative header field {h:?}")).into());
            }
            Ok(CircuitTensor {
                header: CircuitHeader { circ_type, n_qubits: h[1] as usize, n_gates: h[2] as usize },
                gate_type,
                gate_param,
            })
        })
        .collect::<Result<Vec<_>, ContainerError>>()?;
    Ok(CircuitSet { capacity, circuits, metadata })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{encode_circuits, GateList, GateRecord};

    fn sample() -> CircuitSet {
        let mut set = encode_circuits(&[
            GateList::new(CircType::Qft, 2, vec![GateRecord::h(0), GateRecord::cr1(1, 0, 1.25)]),
            GateList::new(CircType::RandomCx, 3, vec![GateRecord::ry(2, -0.5)]),
        ])
        .unwrap();
        set.metadata.insert("seed".into(), "17".into());
        set
    }

    #[test]
    fn binary_round_trip() {
        let set = sample();
        let bytes = encode_binary(&set);
        assert_eq!(&bytes[..5], b"QGIR1");
        let back = decode_binary(&bytes).unwrap();
        assert_eq!(back, set);
        assert_eq!(encode_binary(&back), bytes);
    }

    #[test]
    fn truncation_is_detected() {
        let bytes = encode_binary(&sample());
        for cut in [3, 10, 30, bytes.len() - 1] {
            assert!(decode_binary(&bytes[..cut]).is_err(), "cut at {cut}");
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(decode_binary(&extra), Err(ContainerError::Malformed(_))));
    }

    #[test]
    fn unknown_circ_type_is_rejected() {
        let mut bytes = encode_binary(&sample());
        // first header field sits right after magic + version + capacity + n_circ
        bytes[25..29].copy_from_slice(&7i32.to_le_bytes());
        assert!(matches!(decode_binary(&bytes), Err(ContainerError::Ir(IrError::CorruptTensor { .. }))));
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(Format::from_path(Path::new("a/b.h5")), Format::Hdf5);
        assert_eq!(Format::from_path(Path::new("x.HDF5")), Format::Hdf5);
        assert_eq!(Format::from_path(Path::new("x.qgir")), Format::Binary);
    }
}

//! HDF5 layout for [`CircuitSet`], written through the system libhdf5.
//!
//! ```text
//! /                  attrs: format_version = "1", capacity = d, n_circ = |C|
//! /circ_type         int32 (|C|, 3)
//! /gate_type         int32 (|C|, d, 3)
//! /gate_param        float64 (|C|, d)
//! /meta              group, one string attribute per metadata entry
//! ```
//!
//! Object modification times are disabled so that writing the same set twice
//! yields identical bytes.

use std::collections::BTreeMap;
use std::ffi::{c_char, c_void, CStr, CString};
use std::path::Path;
use std::ptr;
use std::sync::Mutex;

use hdf5_sys::h5::{hsize_t, H5_index_t, H5_iter_order_t, H5free_memory, H5open};
use hdf5_sys::h5a::*;
use hdf5_sys::h5d::*;
use hdf5_sys::h5e::{H5Eset_auto2, H5E_DEFAULT};
use hdf5_sys::h5f::*;
use hdf5_sys::h5g::*;
use hdf5_sys::h5i::hid_t;
use hdf5_sys::h5l::H5Lexists;
use hdf5_sys::h5p::*;
use hdf5_sys::h5s::*;
use hdf5_sys::h5t::*;

use super::container::{assemble, ContainerError, FORMAT_VERSION};
use super::CircuitSet;

// libhdf5 as packaged is built without thread safety.
static LOCK: Mutex<()> = Mutex::new(());

type Closer = unsafe extern "C" fn(hid_t) -> i32;

/// Owned HDF5 identifier, closed on drop.
struct Handle(hid_t, Closer);

impl Handle {
    fn new(id: hid_t, closer: Closer, what: &str) -> Result<Handle, ContainerError> {
        if id < 0 {
            Err(ContainerError::Hdf5(format!("failed to {what}")))
        } else {
            Ok(Handle(id, closer))
        }
    }
}

impl Drop for Handle {
    fn drop(&mut self) {
        unsafe {
            (self.1)(self.0);
        }
    }
}

fn check(status: i32, what: &str) -> Result<(), ContainerError> {
    if status < 0 {
        Err(ContainerError::Hdf5(format!("failed to {what}")))
    } else {
        Ok(())
    }
}

fn cstr(s: &str) -> Result<CString, ContainerError> {
    CString::new(s).map_err(|_| ContainerError::Malformed(format!("name {s:?} contains NUL")))
}

fn init() {
    unsafe {
        H5open();
        H5Eset_auto2(H5E_DEFAULT, None, ptr::null_mut());
    }
}

fn path_cstr(path: &Path) -> Result<CString, ContainerError> {
    let s = path.to_str().ok_or_else(|| ContainerError::Malformed("path is not utf-8".into()))?;
    cstr(s)
}

pub fn write(path: &Path, set: &CircuitSet) -> Result<(), ContainerError> {
    let _guard = LOCK.lock().unwrap_or_else(|e| e.into_inner());
    init();
    let name = path_cstr(path)?;
    unsafe {
        let file = Handle::new(
            H5Fcreate(name.as_ptr(), H5F_ACC_TRUNC, H5P_DEFAULT, H5P_DEFAULT),
            H5Fclose,
            "create file",
        )?;
        write_str_attr(file.0, "format_version", &FORMAT_VERSION.to_string())?;
        write_i64_attr(file.0, "capacity", set.capacity as i64)?;
        write_i64_attr(file.0, "n_circ", set.circuits.len() as i64)?;

        let dcpl = Handle::new(H5Pcreate(*H5P_CLS_DATASET_CREATE), H5Pclose, "create dcpl")?;
        check(H5Pset_obj_track_times(dcpl.0, 0), "disable time tracking")?;
        let gcpl = Handle::new(H5Pcreate(*H5P_CLS_GROUP_CREATE), H5Pclose, "create gcpl")?;
        check(H5Pset_obj_track_times(gcpl.0, 0), "disable time tracking")?;

        let n = set.circuits.len() as hsize_t;
        let d = set.capacity as hsize_t;
        let headers: Vec<i32> = set.circuits.iter().flat_map(|c| c.header.row()).collect();
        write_dataset(file.0, dcpl.0, "circ_type", &[n, 3], *H5T_STD_I32LE, *H5T_NATIVE_INT32, &headers)?;
        let rows: Vec<i32> = set.circuits.iter().flat_map(|c| c.gate_type.iter().flatten().copied()).collect();
        write_dataset(file.0, dcpl.0, "gate_type", &[n, d, 3], *H5T_STD_I32LE, *H5T_NATIVE_INT32, &rows)?;
        let params: Vec<f64> = set.circuits.iter().flat_map(|c| c.gate_param.iter().copied()).collect();
        write_dataset(file.0, dcpl.0, "gate_param", &[n, d], *H5T_IEEE_F64LE, *H5T_NATIVE_DOUBLE, &params)?;

        if !set.metadata.is_empty() {
            let meta = cstr("meta")?;
            let group = Handle::new(
                H5Gcreate2(file.0, meta.as_ptr(), H5P_DEFAULT, gcpl.0, H5P_DEFAULT),
                H5Gclose,
                "create meta group",
            )?;
            for (k, v) in &set.metadata {
                write_str_attr(group.0, k, v)?;
            }
        }
    }
    Ok(())
}

unsafe fn write_dataset<T>(
    loc: hid_t,
    dcpl: hid_t,
    name: &str,
    dims: &[hsize_t],
    file_type: hid_t,
    mem_type: hid_t,
    data: &[T],
) -> Result<(), ContainerError> {
    let cname = cstr(name)?;
    let space = Handle::new(H5Screate_simple(dims.len() as i32, dims.as_ptr(), ptr::null()), H5Sclose, "create space")?;
    let ds = Handle::new(
        H5Dcreate2(loc, cname.as_ptr(), file_type, space.0, H5P_DEFAULT, dcpl, H5P_DEFAULT),
        H5Dclose,
        &format!("create dataset {name}"),
    )?;
    if !data.is_empty() {
        check(
            H5Dwrite(ds.0, mem_type, H5S_ALL, H5S_ALL, H5P_DEFAULT, data.as_ptr() as *const c_void),
            &format!("write dataset {name}"),
        )?;
    }
    Ok(())
}

unsafe fn write_i64_attr(loc: hid_t, name: &str, value: i64) -> Result<(), ContainerError> {
    let cname = cstr(name)?;
    let space = Handle::new(H5Screate(H5S_class_t::H5S_SCALAR), H5Sclose, "create scalar space")?;
    let attr = Handle::new(
        H5Acreate2(loc, cname.as_ptr(), *H5T_STD_I64LE, space.0, H5P_DEFAULT, H5P_DEFAULT),
        H5Aclose,
        &format!("create attribute {name}"),
    )?;
    check(H5Awrite(attr.0, *H5T_NATIVE_INT64, &value as *const i64 as *const c_void), "write attribute")
}

unsafe fn write_str_attr(loc: hid_t, name: &str, value: &str) -> Result<(), ContainerError> {
    let cname = cstr(name)?;
    let space = Handle::new(H5Screate(H5S_class_t::H5S_SCALAR), H5Sclose, "create scalar space")?;
    let ty = Handle::new(H5Tcopy(*H5T_C_S1), H5Tclose, "copy string type")?;
    // zero-length fixed strings are not allowed; an empty value is stored as one NUL
    check(H5Tset_size(ty.0, value.len().max(1)), "size string type")?;
    check(H5Tset_strpad(ty.0, H5T_str_t::H5T_STR_NULLPAD), "pad string type")?;
    check(H5Tset_cset(ty.0, H5T_cset_t::H5T_CSET_UTF8), "set charset")?;
    let attr = Handle::new(
        H5Acreate2(loc, cname.as_ptr(), ty.0, space.0, H5P_DEFAULT, H5P_DEFAULT),
        H5Aclose,
        &format!("create attribute {name}"),
    )?;
    let mut buf = value.as_bytes().to_vec();
    if buf.is_empty() {
        buf.push(0);
    }
    check(H5Awrite(attr.0, ty.0, buf.as_ptr() as *const c_void), "write string attribute")
}

pub fn read(path: &Path) -> Result<CircuitSet, ContainerError> {
    let _guard = LOCK.lock().unwrap_or_else(|e| e.into_inner());
    init();
    let name = path_cstr(path)?;
    unsafe {
        let file = Handle::new(H5Fopen(name.as_ptr(), H5F_ACC_RDONLY, H5P_DEFAULT), H5Fclose, "open file")?;
        let version = read_str_attr(file.0, "format_version")?;
        if version != FORMAT_VERSION.to_string() {
            return Err(ContainerError::UnsupportedVersion(version));
        }
        let capacity = read_i64_attr(file.0, "capacity")?;
        let n_circ = read_i64_attr(file.0, "n_circ")?;
        if capacity < 0 || n_circ < 0 {
            return Err(ContainerError::Malformed("negative capacity or n_circ".into()));
        }
        let (d, n) = (capacity as usize, n_circ as usize);

        let headers: Vec<i32> = read_dataset(file.0, "circ_type", &[n, 3], *H5T_NATIVE_INT32)?;
        let rows: Vec<i32> = read_dataset(file.0, "gate_type", &[n, d, 3], *H5T_NATIVE_INT32)?;
        let params: Vec<f64> = read_dataset(file.0, "gate_param", &[n, d], *H5T_NATIVE_DOUBLE)?;

        let headers = headers.chunks_exact(3).map(|r| [r[0], r[1], r[2]]).collect();
        let gate_types = (0..n)
            .map(|i| rows[i * d * 3..(i + 1) * d * 3].chunks_exact(3).map(|r| [r[0], r[1], r[2]]).collect())
            .collect();
        let params = (0..n).map(|i| params[i * d..(i + 1) * d].to_vec()).collect();

        let mut metadata = BTreeMap::new();
        let meta = cstr("meta")?;
        if H5Lexists(file.0, meta.as_ptr(), H5P_DEFAULT) > 0 {
            let group = Handle::new(H5Gopen2(file.0, meta.as_ptr(), H5P_DEFAULT), H5Gclose, "open meta group")?;
            #[allow(deprecated)]
            let count = H5Aget_num_attrs(group.0);
            let dot = cstr(".")?;
            for i in 0..count.max(0) {
                let attr = Handle::new(
                    H5Aopen_by_idx(
                        group.0,
                        dot.as_ptr(),
                        H5_index_t::H5_INDEX_NAME,
                        H5_iter_order_t::H5_ITER_INC,
                        i as hsize_t,
                        H5P_DEFAULT,
                        H5P_DEFAULT,
                    ),
                    H5Aclose,
                    "open meta attribute",
                )?;
                let len = H5Aget_name(attr.0, 0, ptr::null_mut());
                if len < 0 {
                    return Err(ContainerError::Hdf5("failed to read attribute name".into()));
                }
                let mut buf = vec![0u8; len as usize + 1];
                H5Aget_name(attr.0, buf.len(), buf.as_mut_ptr() as *mut c_char);
                buf.truncate(len as usize);
                let key = String::from_utf8(buf).map_err(|_| ContainerError::Malformed("meta key is not utf-8".into()))?;
                metadata.insert(key, attr_string(attr.0)?);
            }
        }
        assemble(d, headers, gate_types, params, metadata)
    }
}

unsafe fn read_dataset<T: Default + Clone>(
    loc: hid_t,
    name: &str,
    expect: &[usize],
    mem_type: hid_t,
) -> Result<Vec<T>, ContainerError> {
    let cname = cstr(name)?;
    let ds = Handle::new(H5Dopen2(loc, cname.as_ptr(), H5P_DEFAULT), H5Dclose, &format!("open dataset {name}"))?;
    let space = Handle::new(H5Dget_space(ds.0), H5Sclose, "get dataspace")?;
    let rank = H5Sget_simple_extent_ndims(space.0);
    if rank != expect.len() as i32 {
        return Err(ContainerError::Malformed(format!("{name} has rank {rank}, expected {}", expect.len())));
    }
    let mut dims = vec![0 as hsize_t; expect.len()];
    H5Sget_simple_extent_dims(space.0, dims.as_mut_ptr(), ptr::null_mut());
    if dims.iter().zip(expect).any(|(&a, &b)| a as usize != b) {
        return Err(ContainerError::Malformed(format!("{name} has shape {dims:?}, expected {expect:?}")));
    }
    let total: usize = expect.iter().product();
    let mut out = vec![T::default(); total];
    if total > 0 {
        check(
            H5Dread(ds.0, mem_type, H5S_ALL, H5S_ALL, H5P_DEFAULT, out.as_mut_ptr() as *mut c_void),
            &format!("read dataset {name}"),
        )?;
    }
    Ok(out)
}

unsafe fn read_i64_attr(loc: hid_t, name: &str) -> Result<i64, ContainerError> {
    let cname = cstr(name)?;
    let attr = Handle::new(H5Aopen(loc, cname.as_ptr(), H5P_DEFAULT), H5Aclose, &format!("open attribute {name}"))?;
    let mut value = 0i64;
    check(H5Aread(attr.0, *H5T_NATIVE_INT64, &mut value as *mut i64 as *mut c_void), "read attribute")?;
    Ok(value)
}

unsafe fn read_str_attr(loc: hid_t, name: &str) -> Result<String, ContainerError> {
    let cname = cstr(name)?;
    let attr = Handle::new(H5Aopen(loc, cname.as_ptr(), H5P_DEFAULT), H5Aclose, &format!("open attribute {name}"))?;
    attr_string(attr.0)
}

/// Reads a scalar string attribute, fixed or variable length.
unsafe fn attr_string(attr: hid_t) -> Result<String, ContainerError> {
    let ty = Handle::new(H5Aget_type(attr), H5Tclose, "get attribute type")?;
    if H5Tget_class(ty.0) != H5T_class_t::H5T_STRING {
        return Err(ContainerError::Malformed("attribute is not a string".into()));
    }
    let raw = if H5Tis_variable_str(ty.0) > 0 {
        let mem = Handle::new(H5Tcopy(*H5T_C_S1), H5Tclose, "copy string type")?;
        check(H5Tset_size(mem.0, H5T_VARIABLE), "size string type")?;
        // converting between character sets is unsupported, so mirror the file's
        check(H5Tset_cset(mem.0, H5Tget_cset(ty.0)), "set string charset")?;
        let mut p: *mut c_char = ptr::null_mut();
        check(H5Aread(attr, mem.0, &mut p as *mut *mut c_char as *mut c_void), "read string attribute")?;
        if p.is_null() {
            Vec::new()
        } else {
            let bytes = CStr::from_ptr(p).to_bytes().to_vec();
            H5free_memory(p as *mut c_void);
            bytes
        }
    } else {
        let size = H5Tget_size(ty.0);
        let mut buf = vec![0u8; size];
        check(H5Aread(attr, ty.0, buf.as_mut_ptr() as *mut c_void), "read string attribute")?;
        while buf.last() == Some(&0) {
            buf.pop();
        }
        buf
    };
    String::from_utf8(raw).map_err(|_| ContainerError::Malformed("string attribute is not utf-8".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{encode_circuits, CircType, GateList, GateRecord};

    #[test]
    fn round_trip_and_stable_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let mut set = encode_circuits(&[
            GateList::new(CircType::Qft, 3, vec![GateRecord::h(0), GateRecord::cr1(1, 0, 0.5)]),
            GateList::new(CircType::RandomCx, 2, vec![]),
        ])
        .unwrap();
        set.metadata.insert("empty".into(), String::new());
        set.metadata.insert("tool".into(), "qgear".into());
        let a = dir.path().join("a.h5");
        let b = dir.path().join("b.h5");
        write(&a, &set).unwrap();
        let back = read(&a).unwrap();
        assert_eq!(back, set);
        write(&b, &back).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn zero_capacity_set() {
        let dir = tempfile::tempdir().unwrap();
        let set = encode_circuits(&[GateList::new(CircType::Imported, 1, vec![])]).unwrap();
        let p = dir.path().join("z.h5");
        write(&p, &set).unwrap();
        assert_eq!(read(&p).unwrap(), set);
    }
}

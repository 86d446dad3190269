//! C ABI over `wii-core`.
//!
//! Every function returns a [`WiiStatus`]; on failure the message is
//! available from [`wii_last_error`] on the same thread. Handles are opaque
//! and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use wii_core::datagen::{build_dataset, read_dataset, write_dataset, Dataset, DatasetConfig};
use wii_core::experiment::{preset, run_experiment};
use wii_core::nn::{read_model, write_model, Model};
use wii_core::num_complex::Complex32;
use wii_core::transform::{iq_to_features, Representation};
use wii_core::Error;

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WiiStatus {
    Ok = 0,
    /// Bad configuration or argument value.
    Usage = 1,
    /// Malformed, missing or inconsistent data.
    Data = 2,
    /// Training diverged.
    Numeric = 3,
    /// A required pointer was null or a string was not UTF-8.
    InvalidArgument = 4,
    /// Internal failure; the library caught a panic.
    Internal = 5,
}

/// Feature representation codes.
pub const WII_REPR_TIME_IQ: u32 = 0;
pub const WII_REPR_FREQ_IQ: u32 = 1;
pub const WII_REPR_FREQ_AMP_PHASE: u32 = 2;

/// A generated or loaded dataset.
pub struct WiiDataset(Dataset);

/// A trained classifier.
pub struct WiiModel(Model<f32>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> WiiStatus {
    match e.exit_code() {
        1 => WiiStatus::Usage,
        3 => WiiStatus::Numeric,
        _ => WiiStatus::Data,
    }
}

enum Fail {
    Core(Error),
    Arg(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> WiiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WiiStatus::Ok,
        Ok(Err(Fail::Core(e))) => {
            let s = status_of(&e);
            set_error(e.to_string());
            s
        }
        Ok(Err(Fail::Arg(what))) => {
            set_error(what.to_string());
            WiiStatus::InvalidArgument
        }
        Err(_) => {
            set_error("internal error".into());
            WiiStatus::Internal
        }
    }
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    Ok(Path::new(unsafe { str_arg(p)? }))
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Arg("null string argument"));
    }
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Fail::Arg("string argument is not UTF-8"))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    unsafe { p.as_mut() }.ok_or(Fail::Arg("null output pointer"))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    unsafe { p.as_ref() }.ok_or(Fail::Arg("null handle"))
}

fn repr_of(code: u32) -> Result<Representation, Fail> {
    Representation::from_tag(u8::try_from(code).unwrap_or(u8::MAX))
        .ok_or(Fail::Arg("unknown representation code"))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wii_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wii_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Synthesizes `vectors_per_cell` records for every class and SNR.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn wii_dataset_generate(vectors_per_cell: u32, seed: u64, out_ds: *mut *mut WiiDataset) -> WiiStatus {
    guard(|| {
        let slot = unsafe { out(out_ds)? };
        let d = build_dataset(&DatasetConfig::with_cells(vectors_per_cell as usize, seed))?;
        *slot = Box::into_raw(Box::new(WiiDataset(d)));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn wii_dataset_read(path_c: *const c_char, out_ds: *mut *mut WiiDataset) -> WiiStatus {
    guard(|| {
        let slot = unsafe { out(out_ds)? };
        let d = read_dataset(unsafe { path(path_c)? })?;
        *slot = Box::into_raw(Box::new(WiiDataset(d)));
        Ok(())
    })
}

/// # Safety
/// `ds` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wii_dataset_write(ds: *const WiiDataset, path_c: *const c_char) -> WiiStatus {
    guard(|| {
        let d = unsafe { handle(ds)? };
        write_dataset(&d.0, unsafe { path(path_c)? })?;
        Ok(())
    })
}

/// Number of records, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn wii_dataset_len(ds: *const WiiDataset) -> u64 {
    unsafe { ds.as_ref() }.map_or(0, |d| d.0.len() as u64)
}

/// # Safety
/// `ds` must be null or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wii_dataset_free(ds: *mut WiiDataset) {
    if !ds.is_null() {
        drop(unsafe { Box::from_raw(ds) });
    }
}

/// Converts `n` interleaved (I, Q) float pairs into an `n x 2` feature
/// matrix written to `out` (capacity `2 n`).
///
/// # Safety
/// `iq` must point to `2 n` floats and `out` to `2 n` writable floats.
#[no_mangle]
pub unsafe extern "C" fn wii_features_from_iq(iq: *const f32, n: usize, repr: u32, out_values: *mut f32) -> WiiStatus {
    guard(|| {
        if iq.is_null() || out_values.is_null() {
            return Err(Fail::Arg("null buffer"));
        }
        let kind = repr_of(repr)?;
        let raw = unsafe { std::slice::from_raw_parts(iq, 2 * n) };
        let samples: Vec<Complex32> = raw.chunks_exact(2).map(|p| Complex32::new(p[0], p[1])).collect();
        let f = iq_to_features(&samples, kind)?;
        unsafe { std::slice::from_raw_parts_mut(out_values, 2 * n) }.copy_from_slice(&f.values);
        Ok(())
    })
}

/// # Safety
/// `path` must be NUL-terminated; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn wii_model_read(path_c: *const c_char, out_model: *mut *mut WiiModel) -> WiiStatus {
    guard(|| {
        let slot = unsafe { out(out_model)? };
        let m = read_model(unsafe { path(path_c)? })?;
        *slot = Box::into_raw(Box::new(WiiModel(m)));
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wii_model_write(model: *const WiiModel, path_c: *const c_char) -> WiiStatus {
    guard(|| {
        let m = unsafe { handle(model)? };
        write_model(&m.0, unsafe { path(path_c)? })?;
        Ok(())
    })
}

/// Floats per input sample (rows x 2), or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wii_model_input_len(model: *const WiiModel) -> usize {
    unsafe { model.as_ref() }.map_or(0, |m| m.0.input_len())
}

/// Output classes, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wii_model_num_classes(model: *const WiiModel) -> usize {
    unsafe { model.as_ref() }.map_or(0, |m| m.0.num_classes())
}

/// Copies the class id of each output unit into `ids` (capacity `cap`).
///
/// # Safety
/// `ids` must point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn wii_model_class_ids(model: *const WiiModel, ids: *mut u8, cap: usize) -> WiiStatus {
    guard(|| {
        let m = unsafe { handle(model)? };
        if ids.is_null() {
            return Err(Fail::Arg("null buffer"));
        }
        let src = &m.0.class_ids;
        if cap < src.len() {
            return Err(Fail::Arg("class id buffer too small"));
        }
        unsafe { std::slice::from_raw_parts_mut(ids, src.len()) }.copy_from_slice(src);
        Ok(())
    })
}

/// Class posteriors for `n` samples: reads `n * input_len` floats from `x`
/// and writes `n * num_classes` floats to `probs`.
///
/// # Safety
/// Buffers must have the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn wii_model_predict(model: *const WiiModel, x: *const f32, n: usize, probs: *mut f32) -> WiiStatus {
    guard(|| {
        let m = unsafe { handle(model)? };
        if x.is_null() || probs.is_null() {
            return Err(Fail::Arg("null buffer"));
        }
        if n == 0 {
            return Ok(());
        }
        let input = unsafe { std::slice::from_raw_parts(x, n * m.0.input_len()) };
        let p = m.0.predict(input, n)?;
        unsafe { std::slice::from_raw_parts_mut(probs, p.len()) }.copy_from_slice(&p);
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wii_model_free(model: *mut WiiModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Runs a named preset on `ds`, writing reports into `out_dir`; the trained
/// model is returned through `out_model` when it is non-null.
///
/// # Safety
/// Strings must be NUL-terminated; `ds` a live handle.
#[no_mangle]
pub unsafe extern "C" fn wii_run_preset(
    name: *const c_char,
    ds: *const WiiDataset,
    out_dir: *const c_char,
    seed: u64,
    out_model: *mut *mut WiiModel,
) -> WiiStatus {
    guard(|| {
        let mut cfg = preset(unsafe { str_arg(name)? })?;
        cfg.seed = seed;
        let d = unsafe { handle(ds)? };
        let dir = unsafe { path(out_dir)? };
        run_experiment(&cfg, &d.0, dir, |_| {})?;
        if let Some(slot) = unsafe { out_model.as_mut() } {
            let m = read_model(dir.join("model.wiim"))?;
            *slot = Box::into_raw(Box::new(WiiModel(m)));
        }
        Ok(())
    })
}

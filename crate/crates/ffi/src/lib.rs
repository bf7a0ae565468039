//! C ABI for the krig engine.
//!
//! Models are opaque handles created by [`krig_fit`] or [`krig_model_load`]
//! and released with [`krig_model_free`]. Every fallible call returns a
//! [`KrigStatus`]; on failure a human-readable message is available from
//! [`krig_last_error_message`] until the next failing call on the same
//! thread. The generated header lives at `include/krig.h`.
//!
//! Design matrices cross the boundary as dense row-major `double` buffers:
//! point `i` occupies `x[i*m .. (i+1)*m]`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use krig::config::{ConfigFile, EdSource, ModelConfig};
use krig::engine::PredictOptions;
use krig::linalg::Matrix;
use krig::session::KrigingModel;

/// Status codes mirroring the CLI exit-code categories.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KrigStatus {
    Ok = 0,
    /// Invalid configuration (unknown options, bad bounds, ...).
    Config = 2,
    /// Invalid data (shape mismatches, unreadable files, bad artifacts).
    Data = 3,
    /// Numerical failure during fitting or prediction.
    Numerical = 4,
    /// A required pointer argument was null.
    NullArgument = 5,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 6,
    /// An internal panic was caught at the boundary.
    Panic = 7,
}

/// Opaque fitted-model handle.
pub struct KrigModel {
    inner: KrigingModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &krig::KrigError) -> KrigStatus {
    match err.exit_code() {
        2 => KrigStatus::Config,
        3 => KrigStatus::Data,
        _ => KrigStatus::Numerical,
    }
}

fn fail(err: &krig::KrigError) -> KrigStatus {
    set_error(&err.to_string());
    status_of(err)
}

fn guarded(body: impl FnOnce() -> KrigStatus) -> KrigStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic caught at the C boundary");
            KrigStatus::Panic
        }
    }
}

unsafe fn utf8_arg<'a>(ptr: *const c_char) -> Result<&'a str, KrigStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(KrigStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        KrigStatus::InvalidUtf8
    })
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn krig_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Engine version as a static string.
#[no_mangle]
pub extern "C" fn krig_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Fit a model from a TOML configuration (trend/correlation/estimation/
/// optimization options; any `ExpDesign` section is ignored) and an
/// in-memory design: `x` is `n x m` row-major, `y` holds `n` responses.
///
/// # Safety
/// `config_toml` must be a valid NUL-terminated string; `x` must point to
/// `n * m` doubles and `y` to `n` doubles; `out_model` must be a valid
/// destination pointer. On success it receives a handle that must be
/// released with [`krig_model_free`].
#[no_mangle]
pub unsafe extern "C" fn krig_fit(
    config_toml: *const c_char,
    x: *const f64,
    n: usize,
    m: usize,
    y: *const f64,
    out_model: *mut *mut KrigModel,
) -> KrigStatus {
    guarded(|| {
        if x.is_null() || y.is_null() || out_model.is_null() {
            set_error("null pointer argument");
            return KrigStatus::NullArgument;
        }
        if n == 0 || m == 0 {
            set_error("design must have at least one point and one dimension");
            return KrigStatus::Data;
        }
        let config_text = match utf8_arg(config_toml) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let file = match ConfigFile::parse(config_text) {
            Ok(f) => f,
            Err(e) => return fail(&e),
        };
        let x_data = std::slice::from_raw_parts(x, n * m).to_vec();
        let y_data = std::slice::from_raw_parts(y, n).to_vec();
        let x_mat = match Matrix::from_vec(n, m, x_data) {
            Ok(mat) => mat,
            Err(e) => return fail(&e),
        };
        let ed = EdSource::Provided {
            x: x_mat,
            y: Matrix::column(&y_data),
        };
        let config = match ModelConfig::from_file_with_ed(&file, Path::new("."), ed) {
            Ok(c) => c,
            Err(e) => return fail(&e),
        };
        match krig::session::create_model(&config) {
            Ok(model) => {
                *out_model = Box::into_raw(Box::new(KrigModel { inner: model }));
                KrigStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Load a model artifact written by `krig_model_save` (or the CLI).
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out_model` a valid
/// destination pointer.
#[no_mangle]
pub unsafe extern "C" fn krig_model_load(
    path: *const c_char,
    out_model: *mut *mut KrigModel,
) -> KrigStatus {
    guarded(|| {
        if out_model.is_null() {
            set_error("null out_model");
            return KrigStatus::NullArgument;
        }
        let path = match utf8_arg(path) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match krig::model_io::load_model(Path::new(path)) {
            Ok(model) => {
                *out_model = Box::into_raw(Box::new(KrigModel { inner: model }));
                KrigStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Serialize a model to the versioned JSON artifact format.
///
/// # Safety
/// `model` must be a live handle from this library; `path` a valid string.
#[no_mangle]
pub unsafe extern "C" fn krig_model_save(
    model: *const KrigModel,
    path: *const c_char,
) -> KrigStatus {
    guarded(|| {
        let Some(model) = model.as_ref() else {
            set_error("null model handle");
            return KrigStatus::NullArgument;
        };
        let path = match utf8_arg(path) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match krig::model_io::save_model(&model.inner, Path::new(path)) {
            Ok(()) => KrigStatus::Ok,
            Err(e) => fail(&e),
        }
    })
}

/// Input dimensionality M of the fitted model (0 for a null handle).
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn krig_model_input_dim(model: *const KrigModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.input_dim())
}

/// Number of fitted outputs (response columns; 0 for a null handle).
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn krig_model_output_count(model: *const KrigModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.n_outputs())
}

/// Number of training points (0 for a null handle).
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn krig_model_train_size(model: *const KrigModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.n_train())
}

/// Predict at `nq` query points (`xq` is `nq x m` row-major). `out_mean`
/// must hold `nq * output_count` doubles and is filled output-major: all
/// means of output 1, then output 2, ... `out_variance` may be null; when
/// given it receives predictor variances in the same layout.
///
/// # Safety
/// `model` must be a live handle; buffers must match the documented sizes.
#[no_mangle]
pub unsafe extern "C" fn krig_predict(
    model: *const KrigModel,
    xq: *const f64,
    nq: usize,
    out_mean: *mut f64,
    out_variance: *mut f64,
) -> KrigStatus {
    guarded(|| {
        let Some(model) = model.as_ref() else {
            set_error("null model handle");
            return KrigStatus::NullArgument;
        };
        if xq.is_null() || out_mean.is_null() {
            set_error("null buffer argument");
            return KrigStatus::NullArgument;
        }
        let m = model.inner.input_dim();
        let data = std::slice::from_raw_parts(xq, nq * m).to_vec();
        let xq_mat = match Matrix::from_vec(nq, m, data) {
            Ok(mat) => mat,
            Err(e) => return fail(&e),
        };
        let options = if out_variance.is_null() {
            PredictOptions::mean_only()
        } else {
            PredictOptions::with_variance()
        };
        match model.inner.eval(&xq_mat, options) {
            Ok(predictions) => {
                for (k, pred) in predictions.iter().enumerate() {
                    let mean_out = std::slice::from_raw_parts_mut(out_mean.add(k * nq), nq);
                    mean_out.copy_from_slice(&pred.mean);
                    if !out_variance.is_null() {
                        let var = pred.variance.as_ref().expect("variance requested");
                        let var_out = std::slice::from_raw_parts_mut(out_variance.add(k * nq), nq);
                        var_out.copy_from_slice(var);
                    }
                }
                KrigStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Fixed-format report text; free with [`krig_string_free`]. Returns null
/// for a null handle.
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn krig_model_report(model: *const KrigModel) -> *mut c_char {
    let Some(model) = model.as_ref() else {
        return std::ptr::null_mut();
    };
    let report = model.inner.report().replace('\0', " ");
    CString::new(report)
        .map(CString::into_raw)
        .unwrap_or(std::ptr::null_mut())
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must have been returned by [`krig_model_report`] and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn krig_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Release a model handle.
///
/// # Safety
/// `model` must have been returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn krig_model_free(model: *mut KrigModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

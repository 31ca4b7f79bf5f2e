//! C ABI for the qsvm-lab classifiers.
//!
//! Conventions:
//!
//! * Every fallible function returns a [`QsvmStatus`]. On failure a message
//!   is stored per thread and can be read with [`qsvm_last_error_message`].
//! * Feature matrices are row-major `double` arrays of `n_rows * n_features`
//!   values. Labels are `int8_t` values of +1 or -1.
//! * Models are opaque handles created by a `*_train` or `*_from_json`
//!   function and released with the matching `*_free`.
//! * Strings returned through `char **` are owned by the caller and must be
//!   released with [`qsvm_string_free`].
//! * Kernels are described by their JSON form, e.g.
//!   `{"kind":"rbf","gamma":0.5}` or
//!   `{"kind":"quantum_inversion","embedding":{"n_features":4,"axis":"x"}}`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qsvm_lab::data::LabeledSet;
use qsvm_lab::hybrid::{train_qvk, QvkModel};
use qsvm_lab::kernels::{eval_kernel, gram_matrix, KernelSpec};
use qsvm_lab::metrics::{confusion, indicators};
use qsvm_lab::svm::{SvmModel, TrainConfig};
use qsvm_lab::variational::{train_qv, Batch, FitConfig, TrainingTrace, VarModel};
use qsvm_lab::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QsvmStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// A string was not UTF-8, a size was zero, or a value was out of range.
    InvalidArgument = 2,
    Config = 3,
    Data = 4,
    Circuit = 5,
    DegenerateData = 6,
    Serialization = 7,
    Io = 8,
    /// The library panicked. The handle arguments should not be reused.
    Internal = 9,
}

impl From<&Error> for QsvmStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Config(_) => QsvmStatus::Config,
            Error::Data(_) | Error::Ingestion { .. } => QsvmStatus::Data,
            Error::Circuit(_) | Error::UnsupportedGate(_) => QsvmStatus::Circuit,
            Error::DegenerateData(_) => QsvmStatus::DegenerateData,
            Error::Json(_) => QsvmStatus::Serialization,
            Error::Io(_) => QsvmStatus::Io,
        }
    }
}

/// Opaque trained SVM (quantum or classical kernel).
pub struct QsvmSvm(SvmModel);

/// Opaque trained variational classifier.
pub struct QsvmQv(VarModel);

/// Opaque trained hybrid classifier.
pub struct QsvmQvk(QvkModel);

/// Gradient-descent settings for the variational and hybrid models.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QsvmFitConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub layers: usize,
    /// 0 means full batch.
    pub batch_size: usize,
    pub seed: u64,
    pub init_scale: f64,
}

impl From<&FitConfig> for QsvmFitConfig {
    fn from(c: &FitConfig) -> Self {
        Self {
            learning_rate: c.learning_rate,
            epochs: c.epochs,
            layers: c.layers,
            batch_size: match c.batch {
                Batch::Full => 0,
                Batch::Size(k) => k,
            },
            seed: c.seed,
            init_scale: c.init_scale,
        }
    }
}

impl From<&QsvmFitConfig> for FitConfig {
    fn from(c: &QsvmFitConfig) -> Self {
        Self {
            learning_rate: c.learning_rate,
            epochs: c.epochs,
            layers: c.layers,
            batch: if c.batch_size == 0 {
                Batch::Full
            } else {
                Batch::Size(c.batch_size)
            },
            seed: c.seed,
            init_scale: c.init_scale,
        }
    }
}

/// Confusion counts and indicators. Undefined ratios (0/0) are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QsvmIndicators {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    pub f1: f64,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(QsvmStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(QsvmStatus::from(&e), e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(QsvmStatus::InvalidArgument, msg.into())
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> QsvmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            QsvmStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal error: {msg}"));
            QsvmStatus::Internal
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> FfiResult<()> {
    if p.is_null() {
        Err(Failure(
            QsvmStatus::NullPointer,
            format!("`{name}` is NULL"),
        ))
    } else {
        Ok(())
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    non_null(p, name)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("`{name}` is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> FfiResult<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, name)?;
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, name: &str) -> FfiResult<&'a mut [T]> {
    if len == 0 {
        return Ok(&mut []);
    }
    non_null(p, name)?;
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn rows_arg(
    x: *const f64,
    n_rows: usize,
    n_features: usize,
    name: &str,
) -> FfiResult<Vec<Vec<f64>>> {
    if n_rows == 0 || n_features == 0 {
        return Err(invalid(format!(
            "`{name}` needs at least one row and one feature"
        )));
    }
    let len = n_rows
        .checked_mul(n_features)
        .ok_or_else(|| invalid(format!("`{name}` dimensions overflow")))?;
    Ok(slice_arg(x, len, name)?
        .chunks(n_features)
        .map(<[f64]>::to_vec)
        .collect())
}

unsafe fn labeled_arg(
    x: *const f64,
    y: *const i8,
    n_rows: usize,
    n_features: usize,
    name: &str,
) -> FfiResult<LabeledSet> {
    let features = rows_arg(x, n_rows, n_features, name)?;
    let labels = slice_arg(y, n_rows, "labels")?.to_vec();
    Ok(LabeledSet::new(features, labels)?)
}

unsafe fn kernel_arg(p: *const c_char) -> FfiResult<KernelSpec> {
    let text = str_arg(p, "kernel_json")?;
    let spec: KernelSpec =
        serde_json::from_str(text).map_err(|e| invalid(format!("kernel_json: {e}")))?;
    spec.validate()?;
    Ok(spec)
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> FfiResult<&'a T> {
    non_null(p, name)?;
    Ok(&*p)
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> FfiResult<()> {
    non_null(out, name)?;
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, text: String) -> FfiResult<()> {
    let c = CString::new(text).map_err(|_| invalid("output contains a NUL byte"))?;
    write_out(out, c.into_raw(), "out")
}

fn trace_text(trace: &TrainingTrace) -> FfiResult<String> {
    let mut buf = Vec::new();
    trace.write_csv(&mut buf)?;
    String::from_utf8(buf).map_err(|e| invalid(e.to_string()))
}

unsafe fn into_handle<T>(out: *mut *mut T, value: T) -> FfiResult<()> {
    write_out(out, Box::into_raw(Box::new(value)), "out")
}

unsafe fn free_handle<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the last failed call on this thread, or NULL if the last
/// call succeeded. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn qsvm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qsvm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must be NULL or a string returned through a `char **` argument of this
/// library that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn qsvm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Evaluates `k(x1, x2)` for two vectors of `n_features` values.
///
/// # Safety
/// `kernel_json` must be a NUL-terminated string, `x1` and `x2` must point to
/// `n_features` doubles and `out` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn qsvm_kernel_eval(
    kernel_json: *const c_char,
    x1: *const f64,
    x2: *const f64,
    n_features: usize,
    out: *mut f64,
) -> QsvmStatus {
    guard(|| {
        let spec = kernel_arg(kernel_json)?;
        let a = rows_arg(x1, 1, n_features, "x1")?;
        let b = rows_arg(x2, 1, n_features, "x2")?;
        write_out(out, eval_kernel(&a[0], &b[0], &spec)?, "out")
    })
}

/// Fills `out` (row-major, `n_rows * n_rows`) with the Gram matrix of `x`.
///
/// # Safety
/// `x` must point to `n_rows * n_features` doubles and `out` to
/// `n_rows * n_rows` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qsvm_gram_matrix(
    kernel_json: *const c_char,
    x: *const f64,
    n_rows: usize,
    n_features: usize,
    out: *mut f64,
) -> QsvmStatus {
    guard(|| {
        let spec = kernel_arg(kernel_json)?;
        let xs = rows_arg(x, n_rows, n_features, "x")?;
        let gram = gram_matrix(&xs, &spec)?;
        let dst = out_slice(out, n_rows * n_rows, "out")?;
        for (i, row) in dst.chunks_mut(n_rows).enumerate() {
            row.copy_from_slice(gram.row(i));
        }
        Ok(())
    })
}

/// Confusion counts and indicators with +1 as the positive class.
///
/// # Safety
/// `y_true` and `y_pred` must point to `n` labels and `out` to one writable
/// struct.
#[no_mangle]
pub unsafe extern "C" fn qsvm_indicators(
    y_true: *const i8,
    y_pred: *const i8,
    n: usize,
    out: *mut QsvmIndicators,
) -> QsvmStatus {
    guard(|| {
        let t = slice_arg(y_true, n, "y_true")?;
        let p = slice_arg(y_pred, n, "y_pred")?;
        let cm = confusion(t, p)?;
        let ind = indicators(&cm)?;
        let v = |r: qsvm_lab::metrics::Ratio| r.value().unwrap_or(f64::NAN);
        write_out(
            out,
            QsvmIndicators {
                accuracy: v(ind.accuracy),
                precision: v(ind.precision),
                recall: v(ind.recall),
                specificity: v(ind.specificity),
                f1: v(ind.f1),
                tp: cm.tp,
                fp: cm.fp,
                fn_: cm.fn_,
                tn: cm.tn,
            },
            "out",
        )
    })
}

/// Trains a soft-margin SVM with SMO.
///
/// # Safety
/// `x` must point to `n_rows * n_features` doubles, `y` to `n_rows` labels
/// and `out` to a writable handle pointer.
#[no_mangle]
pub unsafe extern "C" fn qsvm_svm_train(
    kernel_json: *const c_char,
    x: *const f64,
    y: *const i8,
    n_rows: usize,
    n_features: usize,
    c: f64,
    seed: u64,
    out: *mut *mut QsvmSvm,
) -> QsvmStatus {
    guard(|| {
        non_null(out, "out")?;
        let spec = kernel_arg(kernel_json)?;
        let set = labeled_arg(x, y, n_rows, n_features, "x")?;
        let cfg = TrainConfig {
            c,
            seed,
            ..TrainConfig::default()
        };
        let model = SvmModel::fit(&set.features, &set.labels, spec, &cfg)?;
        into_handle(out, QsvmSvm(model))
    })
}

/// Decision values `f(x)` for `n_rows` samples.
///
/// # Safety
/// `model` must be a live handle, `x` must point to `n_rows * n_features`
/// doubles and `out` to `n_rows` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qsvm_svm_decision(
    model: *const QsvmSvm,
    x: *const f64,
    n_rows: usize,
    n_features: usize,
    out: *mut f64,
) -> QsvmStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let xs = rows_arg(x, n_rows, n_features, "x")?;
        out_slice(out, n_rows, "out")?.copy_from_slice(&m.0.decision_values(&xs)?);
        Ok(())
    })
}

/// Predicted labels (+1 or -1) for `n_rows` samples.
///
/// # Safety
/// As for [`qsvm_svm_decision`], with `out` pointing to `n_rows` labels.
#[no_mangle]
pub unsafe extern "C" fn qsvm_svm_predict(
    model: *const QsvmSvm,
    x: *const f64,
    n_rows: usize,
    n_features: usize,
    out: *mut i8,
) -> QsvmStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let xs = rows_arg(x, n_rows, n_features, "x")?;
        let dst = out_slice(out, n_rows, "out")?;
        for (d, x) in dst.iter_mut().zip(&xs) {
            *d = m.0.predict(x)?;
        }
        Ok(())
    })
}

/// Serializes the model to JSON. Free the result with [`qsvm_string_free`].
///
/// # Safety
/// `model` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qsvm_svm_to_json(
    model: *const QsvmSvm,
    out: *mut *mut c_char,
) -> QsvmStatus {
    guard(|| {
        let m = handle(model, "model")?;
        write_string(out, serde_json::to_string(&m.0).map_err(Error::from)?)
    })
}

/// Restores a model serialized by [`qsvm_svm_to_json`].
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qsvm_svm_from_json(
    json: *const c_char,
    out: *mut *mut QsvmSvm,
) -> QsvmStatus {
    guard(|| {
        let model: SvmModel = serde_json::from_str(str_arg(json, "json")?).map_err(Error::from)?;
        into_handle(out, QsvmSvm(model))
    })
}

/// Releases an SVM handle. NULL is ignored.
///
/// # Safety
/// `model` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn qsvm_svm_free(model: *mut QsvmSvm) {
    free_handle(model);
}

/// Default settings for the variational classifier.
#[no_mangle]
pub extern "C" fn qsvm_fit_config_qv_default() -> QsvmFitConfig {
    QsvmFitConfig::from(&FitConfig::for_qv())
}

/// Default settings for the hybrid classifier.
#[no_mangle]
pub extern "C" fn qsvm_fit_config_qvk_default() -> QsvmFitConfig {
    QsvmFitConfig::from(&FitConfig::for_qvk())
}

/// Arguments shared by the two gradient-trained models.
struct FitArgs {
    train: LabeledSet,
    test: LabeledSet,
    cfg: FitConfig,
}

#[allow(clippy::too_many_arguments)]
unsafe fn fit_args(
    x_train: *const f64,
    y_train: *const i8,
    n_train: usize,
    x_test: *const f64,
    y_test: *const i8,
    n_test: usize,
    n_features: usize,
    config: *const QsvmFitConfig,
) -> FfiResult<FitArgs> {
    let cfg = FitConfig::from(handle(config, "config")?);
    cfg.validate()?;
    Ok(FitArgs {
        train: labeled_arg(x_train, y_train, n_train, n_features, "x_train")?,
        test: labeled_arg(x_test, y_test, n_test, n_features, "x_test")?,
        cfg,
    })
}

/// Trains the variational classifier. The held-out set only feeds the
/// per-epoch trace. If `trace_csv` is not NULL it receives the trace as CSV;
/// free it with [`qsvm_string_free`].
///
/// # Safety
/// Feature pointers must hold `n_train * n_features` and
/// `n_test * n_features` doubles, label pointers `n_train` and `n_test`
/// labels; `config` must point to a valid struct and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn qsvm_qv_train(
    x_train: *const f64,
    y_train: *const i8,
    n_train: usize,
    x_test: *const f64,
    y_test: *const i8,
    n_test: usize,
    n_features: usize,
    config: *const QsvmFitConfig,
    out: *mut *mut QsvmQv,
    trace_csv: *mut *mut c_char,
) -> QsvmStatus {
    guard(|| {
        non_null(out, "out")?;
        let a = fit_args(
            x_train, y_train, n_train, x_test, y_test, n_test, n_features, config,
        )?;
        let (model, trace) = train_qv(&a.train, &a.test, &a.cfg)?;
        if !trace_csv.is_null() {
            write_string(trace_csv, trace_text(&trace)?)?;
        }
        into_handle(out, QsvmQv(model))
    })
}

/// Raw scores `⟨Z₀⟩ + b` for `n_rows` samples.
///
/// # Safety
/// `model` must be a live handle, `x` must point to `n_rows * n_features`
/// doubles and `out` to `n_rows` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qsvm_qv_scores(
    model: *const QsvmQv,
    x: *const f64,
    n_rows: usize,
    n_features: usize,
    out: *mut f64,
) -> QsvmStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let xs = rows_arg(x, n_rows, n_features, "x")?;
        out_slice(out, n_rows, "out")?.copy_from_slice(&m.0.scores(&xs)?);
        Ok(())
    })
}

/// Serializes the model to JSON. Free the result with [`qsvm_string_free`].
///
/// # Safety
/// `model` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qsvm_qv_to_json(
    model: *const QsvmQv,
    out: *mut *mut c_char,
) -> QsvmStatus {
    guard(|| {
        let m = handle(model, "model")?;
        write_string(out, serde_json::to_string(&m.0).map_err(Error::from)?)
    })
}

/// Restores a model serialized by [`qsvm_qv_to_json`].
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qsvm_qv_from_json(
    json: *const c_char,
    out: *mut *mut QsvmQv,
) -> QsvmStatus {
    guard(|| {
        let model: VarModel = serde_json::from_str(str_arg(json, "json")?).map_err(Error::from)?;
        into_handle(out, QsvmQv(model))
    })
}

/// Releases a variational-model handle. NULL is ignored.
///
/// # Safety
/// `model` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn qsvm_qv_free(model: *mut QsvmQv) {
    free_handle(model);
}

/// Trains the hybrid classifier jointly on ansatz angles, expansion weights
/// and bias. Arguments as for [`qsvm_qv_train`].
///
/// # Safety
/// As for [`qsvm_qv_train`].
#[no_mangle]
pub unsafe extern "C" fn qsvm_qvk_train(
    x_train: *const f64,
    y_train: *const i8,
    n_train: usize,
    x_test: *const f64,
    y_test: *const i8,
    n_test: usize,
    n_features: usize,
    config: *const QsvmFitConfig,
    out: *mut *mut QsvmQvk,
    trace_csv: *mut *mut c_char,
) -> QsvmStatus {
    guard(|| {
        non_null(out, "out")?;
        let a = fit_args(
            x_train, y_train, n_train, x_test, y_test, n_test, n_features, config,
        )?;
        let (model, trace) = train_qvk(&a.train, &a.test, &a.cfg)?;
        if !trace_csv.is_null() {
            write_string(trace_csv, trace_text(&trace)?)?;
        }
        into_handle(out, QsvmQvk(model))
    })
}

/// Scores `Σ w_i k_θ(x_i, x) + b` for `n_rows` samples.
///
/// # Safety
/// As for [`qsvm_qv_scores`].
#[no_mangle]
pub unsafe extern "C" fn qsvm_qvk_scores(
    model: *const QsvmQvk,
    x: *const f64,
    n_rows: usize,
    n_features: usize,
    out: *mut f64,
) -> QsvmStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let xs = rows_arg(x, n_rows, n_features, "x")?;
        out_slice(out, n_rows, "out")?.copy_from_slice(&m.0.scores(&xs)?);
        Ok(())
    })
}

/// Serializes the model to JSON. Free the result with [`qsvm_string_free`].
///
/// # Safety
/// `model` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qsvm_qvk_to_json(
    model: *const QsvmQvk,
    out: *mut *mut c_char,
) -> QsvmStatus {
    guard(|| {
        let m = handle(model, "model")?;
        write_string(out, serde_json::to_string(&m.0).map_err(Error::from)?)
    })
}

/// Restores a model serialized by [`qsvm_qvk_to_json`].
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qsvm_qvk_from_json(
    json: *const c_char,
    out: *mut *mut QsvmQvk,
) -> QsvmStatus {
    guard(|| {
        let model: QvkModel = serde_json::from_str(str_arg(json, "json")?).map_err(Error::from)?;
        into_handle(out, QsvmQvk(model))
    })
}

/// Releases a hybrid-model handle. NULL is ignored.
///
/// # Safety
/// `model` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn qsvm_qvk_free(model: *mut QsvmQvk) {
    free_handle(model);
}

//! C ABI over the `collide` estimators.
//!
//! Every fallible function returns a [`CollideStatus`] and writes its result
//! through an out-pointer. On failure a description is available from
//! [`collide_last_error`] on the same thread. Handles are opaque and must be
//! released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use collide::{BatchStream, EstimatorConfig, MomentEstimate, RegimeOutcome, SamplePlan};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollideStatus {
    Ok = 0,
    InvalidArgument = 1,
    InsufficientData = 2,
    OutOfRange = 3,
    NullPointer = 4,
    Internal = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollideRegimeOutcome {
    Fired = 0,
    Saturated = 1,
    NoFire = 2,
}

/// Estimation parameters. Create with `collide_config_new`.
pub struct CollideConfig {
    inner: EstimatorConfig,
}

/// Incremental estimator that holds one batch at a time.
pub struct CollideStream {
    inner: Option<BatchStream>,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CollideEstimate {
    pub p_hat: f64,
    pub entropy_bits: f64,
    /// True when `p_hat` is zero and `entropy_bits` is only a lower bound.
    pub entropy_is_lower_bound: bool,
    pub d: u32,
    pub n_used: u64,
    pub n_batches: u64,
    pub batch_size: u64,
    pub n_dropped: u64,
    pub peak_distinct: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CollidePlan {
    pub n_total: u64,
    pub n_batches: u64,
    pub batch_size: u64,
    pub assumed_norm_lower: f64,
    pub variance_ratio_bound: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollideRegime {
    pub lambda: u32,
    pub p_bracket_low: f64,
    pub p_bracket_high: f64,
    pub tests_run: u32,
    pub samples_used: u64,
    pub per_test_delta: f64,
    pub outcome: CollideRegimeOutcome,
}

impl From<&MomentEstimate> for CollideEstimate {
    fn from(e: &MomentEstimate) -> Self {
        Self {
            p_hat: e.p_hat,
            entropy_bits: e.renyi_entropy_bits.bits(),
            entropy_is_lower_bound: !e.renyi_entropy_bits.is_exact(),
            d: e.d,
            n_used: e.n_used,
            n_batches: e.n_batches,
            batch_size: e.batch_size,
            n_dropped: e.n_dropped,
            peak_distinct: e.peak_distinct,
        }
    }
}

impl From<&SamplePlan> for CollidePlan {
    fn from(p: &SamplePlan) -> Self {
        Self {
            n_total: p.n_total,
            n_batches: p.n_batches,
            batch_size: p.batch_size,
            assumed_norm_lower: p.assumed_norm_lower,
            variance_ratio_bound: p.variance_ratio_bound,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &collide::Error) -> CollideStatus {
    use collide::Error::*;
    match err {
        InsufficientData { .. } | StreamExhausted { .. } => CollideStatus::InsufficientData,
        Range(_) => CollideStatus::OutOfRange,
        Consistency(_) => CollideStatus::Internal,
        InvalidConfig(_) | Domain(_) | Precondition(_) | Inapplicable(_) | Parse(_) => {
            CollideStatus::InvalidArgument
        }
    }
}

enum Failure {
    Core(collide::Error),
    Null(&'static str),
}

impl From<collide::Error> for Failure {
    fn from(e: collide::Error) -> Self {
        Failure::Core(e)
    }
}

/// Runs `f`, records any error for `collide_last_error` and keeps panics
/// from crossing the ABI boundary.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> CollideStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CollideStatus::Ok,
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            CollideStatus::NullPointer
        }
        Err(_) => {
            set_error("internal panic".into());
            CollideStatus::Internal
        }
    }
}

unsafe fn slice<'a, T>(data: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn write<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(value);
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn collide_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `out` must be a valid pointer to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn collide_config_new(
    d: u32,
    epsilon: f64,
    delta: f64,
    out: *mut *mut CollideConfig,
) -> CollideStatus {
    guard(|| {
        let inner = EstimatorConfig::new(d, epsilon, delta)?;
        let handle = Box::into_raw(Box::new(CollideConfig { inner }));
        write(out, handle, "out").inspect_err(|_| drop(Box::from_raw(handle)))
    })
}

/// Fixes the batch length instead of deriving it from the sample count.
///
/// # Safety
/// `cfg` must come from `collide_config_new` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn collide_config_set_batch_size(cfg: *mut CollideConfig, batch_size: u64) -> CollideStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or(Failure::Null("cfg"))?;
        cfg.inner = cfg.inner.with_batch_size(batch_size)?;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be NULL or a handle from `collide_config_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn collide_config_free(cfg: *mut CollideConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Estimates `sum_x p(x)^d` from `len` symbols.
///
/// # Safety
/// `cfg` must be a live handle, `symbols` must point to `len` values and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn collide_estimate_moment(
    cfg: *const CollideConfig,
    symbols: *const u64,
    len: usize,
    out: *mut CollideEstimate,
) -> CollideStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or(Failure::Null("cfg"))?;
        let samples = slice(symbols, len, "symbols")?;
        let est = collide::estimate_moment(samples, &cfg.inner)?;
        write(out, CollideEstimate::from(&est), "out")
    })
}

/// Sample plan for a distribution whose order-`d` Renyi entropy is at most
/// `entropy_upper_bits`.
///
/// # Safety
/// `cfg` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn collide_plan_samples(
    cfg: *const CollideConfig,
    entropy_upper_bits: f64,
    out: *mut CollidePlan,
) -> CollideStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or(Failure::Null("cfg"))?;
        let plan = collide::plan_samples(&cfg.inner, entropy_upper_bits)?;
        write(out, CollidePlan::from(&plan), "out")
    })
}

/// Number of monochromatic `d`-subsets in `batch`. Fails with
/// `OUT_OF_RANGE` if the count does not fit in 64 bits.
///
/// # Safety
/// `batch` must point to `len` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn collide_count_collisions_u64(
    batch: *const u64,
    len: usize,
    d: u32,
    out: *mut u64,
) -> CollideStatus {
    guard(|| {
        let batch = slice(batch, len, "batch")?;
        let count = collide::count_collisions(batch, d)?;
        let count = u64::try_from(&count)
            .map_err(|_| collide::Error::Range(format!("collision count {count} exceeds 64 bits")))?;
        write(out, count, "out")
    })
}

/// `H_d = log2(p) / (1 - d)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn collide_moment_to_entropy(p: f64, d: u32, out: *mut f64) -> CollideStatus {
    guard(|| write(out, collide::moment_to_entropy(p, d)?, "out"))
}

/// Runs the doubling regime search over `len` symbols.
///
/// # Safety
/// `symbols` must point to `len` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn collide_learn_regime(
    symbols: *const u64,
    len: usize,
    d: u32,
    delta_total: f64,
    lambda_max: u32,
    out: *mut CollideRegime,
) -> CollideStatus {
    guard(|| {
        let samples = slice(symbols, len, "symbols")?;
        let r = collide::learn_regime(samples.iter().copied(), d, delta_total, lambda_max)?;
        let outcome = match r.outcome {
            RegimeOutcome::Fired => CollideRegimeOutcome::Fired,
            RegimeOutcome::Saturated => CollideRegimeOutcome::Saturated,
            RegimeOutcome::NoFire => CollideRegimeOutcome::NoFire,
        };
        let regime = CollideRegime {
            lambda: r.lambda,
            p_bracket_low: r.p_bracket_low,
            p_bracket_high: r.p_bracket_high,
            tests_run: r.tests_run,
            samples_used: r.samples_used,
            per_test_delta: r.per_test_delta,
            outcome,
        };
        write(out, regime, "out")
    })
}

/// 64-bit FNV-1a of `len` bytes, the same symbol hash the CLI applies to
/// text input.
///
/// # Safety
/// `bytes` must point to `len` readable bytes (or be NULL with `len == 0`).
#[no_mangle]
pub unsafe extern "C" fn collide_hash_token(bytes: *const u8, len: usize) -> u64 {
    let data = if len == 0 || bytes.is_null() { &[][..] } else { std::slice::from_raw_parts(bytes, len) };
    collide::ingest::hash_token(data)
}

/// Opens a stream of `n_batches` batches of `batch_size` symbols.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn collide_stream_new(
    d: u32,
    batch_size: u64,
    n_batches: u64,
    out: *mut *mut CollideStream,
) -> CollideStatus {
    guard(|| {
        let inner = BatchStream::new(d, batch_size, n_batches)?;
        let handle = Box::into_raw(Box::new(CollideStream { inner: Some(inner) }));
        write(out, handle, "out").inspect_err(|_| drop(Box::from_raw(handle)))
    })
}

/// Feeds `len` symbols. Symbols beyond the last batch are counted as dropped.
///
/// # Safety
/// `stream` must be a live handle and `symbols` must point to `len` values.
#[no_mangle]
pub unsafe extern "C" fn collide_stream_push(
    stream: *mut CollideStream,
    symbols: *const u64,
    len: usize,
) -> CollideStatus {
    guard(|| {
        let stream = stream.as_mut().ok_or(Failure::Null("stream"))?;
        let symbols = slice(symbols, len, "symbols")?;
        let inner = stream
            .inner
            .as_mut()
            .ok_or_else(|| collide::Error::Precondition("stream already finished".into()))?;
        inner.extend(symbols.iter().copied())?;
        Ok(())
    })
}

/// True once every batch is full.
///
/// # Safety
/// `stream` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn collide_stream_is_complete(stream: *const CollideStream) -> bool {
    stream
        .as_ref()
        .and_then(|s| s.inner.as_ref())
        .is_some_and(BatchStream::is_complete)
}

/// Produces the estimate. The handle can only be finished once and must
/// still be freed afterwards.
///
/// # Safety
/// `stream` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn collide_stream_finish(stream: *mut CollideStream, out: *mut CollideEstimate) -> CollideStatus {
    guard(|| {
        let stream = stream.as_mut().ok_or(Failure::Null("stream"))?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let inner = stream
            .inner
            .take()
            .ok_or_else(|| collide::Error::Precondition("stream already finished".into()))?;
        let est = inner.finish()?;
        write(out, CollideEstimate::from(&est), "out")
    })
}

/// # Safety
/// `stream` must be NULL or a handle from `collide_stream_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn collide_stream_free(stream: *mut CollideStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}

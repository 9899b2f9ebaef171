//! C ABI for `sphergeo`.
//!
//! Boxes cross the boundary as flat `double` buffers of `n * 4` values in
//! `(lon, lat, fov_h, fov_v)` degree order, row-major. Every call returns an
//! [`SgStatus`]; on failure the optional [`SgError`] out-parameter receives
//! the code, the offending row (or -1) and a NUL-terminated message. There is
//! no global state, so every function may be called from any thread.
//!
//! Results are bit-identical to the corresponding `sphergeo` calls.

use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use sphergeo::iou::McParams;
use sphergeo::loss::{loss_gradient, LossKind};
use sphergeo::nms::{nms_indices, Detection};
use sphergeo::{FovBBox, IouMethod};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidBox = 2,
    InvalidArgument = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

/// IoU measure selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgMethod {
    Fov = 0,
    Sph = 1,
    Exact = 2,
    /// Monte-Carlo, one million samples, seed 0.
    MonteCarlo = 3,
}

pub const SG_MESSAGE_LEN: usize = 256;

/// Error details. `index` is the offending box row, or -1.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SgError {
    pub code: SgStatus,
    pub index: i64,
    pub message: [c_char; SG_MESSAGE_LEN],
}

/// Validated box list. Create with `sg_boxes_new`, release with `sg_boxes_free`.
pub struct SgBoxSet {
    boxes: Vec<FovBBox>,
}

struct Failure {
    code: SgStatus,
    index: i64,
    message: String,
}

impl Failure {
    fn new(code: SgStatus, message: impl Into<String>) -> Self {
        Self {
            code,
            index: -1,
            message: message.into(),
        }
    }

    fn null(what: &str) -> Self {
        Self::new(SgStatus::NullPointer, format!("{what} is null"))
    }
}

type Outcome = Result<(), Failure>;

fn report(err: *mut SgError, f: &Failure) {
    // SAFETY: the caller passes either null or a writable SgError
    let Some(e) = (unsafe { err.as_mut() }) else {
        return;
    };
    e.code = f.code;
    e.index = f.index;
    e.message = [0; SG_MESSAGE_LEN];
    for (dst, src) in e.message.iter_mut().zip(f.message.bytes().take(SG_MESSAGE_LEN - 1)) {
        *dst = src as c_char;
    }
}

/// Runs `body`, converting failures and panics into a status.
fn guard(err: *mut SgError, body: impl FnOnce() -> Outcome) -> SgStatus {
    let f = match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => return SgStatus::Ok,
        Ok(Err(f)) => f,
        Err(_) => Failure::new(SgStatus::Panic, "internal panic"),
    };
    report(err, &f);
    f.code
}

/// # Safety
/// `ptr` must be null or valid for `len` reads.
unsafe fn input<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

/// # Safety
/// `ptr` must be null or valid for `len` writes.
unsafe fn output<'a, T>(ptr: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    Ok(slice::from_raw_parts_mut(ptr, len))
}

fn rows(n: usize) -> Result<usize, Failure> {
    n.checked_mul(4)
        .ok_or_else(|| Failure::new(SgStatus::InvalidArgument, "row count overflows"))
}

fn parse_boxes(flat: &[f64]) -> Result<Vec<FovBBox>, Failure> {
    flat.chunks_exact(4)
        .enumerate()
        .map(|(i, r)| {
            FovBBox::new(r[0], r[1], r[2], r[3]).map_err(|e| Failure {
                code: SgStatus::InvalidBox,
                index: i as i64,
                message: format!("row {i}: {e}"),
            })
        })
        .collect()
}

/// # Safety
/// `data` must be null or valid for `n * 4` reads.
unsafe fn read_boxes(data: *const f64, n: usize, what: &str) -> Result<Vec<FovBBox>, Failure> {
    parse_boxes(input(data, rows(n)?, what)?)
}

fn method(m: SgMethod) -> IouMethod {
    match m {
        SgMethod::Fov => IouMethod::Fov,
        SgMethod::Sph => IouMethod::Sph,
        SgMethod::Exact => IouMethod::Exact,
        SgMethod::MonteCarlo => IouMethod::MonteCarlo(McParams::new(1_000_000, 0).expect("valid sample count")),
    }
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Validates `n` boxes and stores them in a new handle written to `out`.
///
/// # Safety
/// `data` must be valid for `n * 4` reads, `out` for one write, `err` null or writable.
#[no_mangle]
pub unsafe extern "C" fn sg_boxes_new(data: *const f64, n: usize, out: *mut *mut SgBoxSet, err: *mut SgError) -> SgStatus {
    guard(err, || {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let boxes = read_boxes(data, n, "data")?;
        *out = Box::into_raw(Box::new(SgBoxSet { boxes }));
        Ok(())
    })
}

/// Number of boxes in the set; 0 for null.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sg_boxes_len(set: *const SgBoxSet) -> usize {
    set.as_ref().map_or(0, |s| s.boxes.len())
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `set` must be null or a handle from `sg_boxes_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sg_boxes_free(set: *mut SgBoxSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// IoU of two single boxes (4 doubles each).
///
/// # Safety
/// `a` and `b` must be valid for 4 reads, `out` for one write, `err` null or writable.
#[no_mangle]
pub unsafe extern "C" fn sg_iou(a: *const f64, b: *const f64, m: SgMethod, out: *mut f64, err: *mut SgError) -> SgStatus {
    guard(err, || {
        let a = read_boxes(a, 1, "a")?;
        let b = read_boxes(b, 1, "b")?;
        let out = output(out, 1, "out")?;
        out[0] = method(m).iou(&a[0], &b[0]);
        Ok(())
    })
}

/// Row-major `n_a x n_b` IoU matrix into `out` (capacity `out_len`).
///
/// # Safety
/// Box buffers must be valid for `n * 4` reads, `out` for `out_len` writes.
#[no_mangle]
pub unsafe extern "C" fn sg_iou_matrix(
    a: *const f64,
    n_a: usize,
    b: *const f64,
    n_b: usize,
    m: SgMethod,
    out: *mut f64,
    out_len: usize,
    err: *mut SgError,
) -> SgStatus {
    guard(err, || {
        let a = read_boxes(a, n_a, "a")?;
        let b = read_boxes(b, n_b, "b")?;
        matrix_into(&a, &b, m, out, out_len)
    })
}

/// FoV-IoU matrix; `sg_iou_matrix` with `SG_METHOD_FOV` and an `n_a * n_b` buffer.
///
/// # Safety
/// As for `sg_iou_matrix`.
#[no_mangle]
pub unsafe extern "C" fn sg_batch_fov_iou(
    a: *const f64,
    n_a: usize,
    b: *const f64,
    n_b: usize,
    out: *mut f64,
    err: *mut SgError,
) -> SgStatus {
    match n_a.checked_mul(n_b) {
        Some(len) => sg_iou_matrix(a, n_a, b, n_b, SgMethod::Fov, out, len, err),
        None => guard(err, || Err(Failure::new(SgStatus::InvalidArgument, "matrix size overflows"))),
    }
}

/// Same as `sg_iou_matrix` on validated handles.
///
/// # Safety
/// `a` and `b` must be live handles, `out` valid for `out_len` writes.
#[no_mangle]
pub unsafe extern "C" fn sg_boxes_iou_matrix(
    a: *const SgBoxSet,
    b: *const SgBoxSet,
    m: SgMethod,
    out: *mut f64,
    out_len: usize,
    err: *mut SgError,
) -> SgStatus {
    guard(err, || {
        let a = a.as_ref().ok_or_else(|| Failure::null("a"))?;
        let b = b.as_ref().ok_or_else(|| Failure::null("b"))?;
        matrix_into(&a.boxes, &b.boxes, m, out, out_len)
    })
}

unsafe fn matrix_into(a: &[FovBBox], b: &[FovBBox], m: SgMethod, out: *mut f64, out_len: usize) -> Outcome {
    let need = a.len() * b.len();
    if out_len < need {
        return Err(Failure::new(
            SgStatus::BufferTooSmall,
            format!("output holds {out_len} values, {need} needed"),
        ));
    }
    let out = output(out, need, "out")?;
    out.copy_from_slice(sphergeo::iou_matrix(a, b, method(m)).values());
    Ok(())
}

/// FoV-GIoU loss of `n` (ground truth, detection) row pairs. Writes `n`
/// losses and, when `grad` is not null, `n * 4` gradients with respect to the
/// detection's `(lon, lat, fov_h, fov_v)`, per degree.
///
/// # Safety
/// `gt` and `det` must be valid for `n * 4` reads, `loss` for `n` writes and
/// `grad` null or valid for `n * 4` writes.
#[no_mangle]
pub unsafe extern "C" fn sg_batch_fov_giou_loss(
    gt: *const f64,
    det: *const f64,
    n: usize,
    loss: *mut f64,
    grad: *mut f64,
    err: *mut SgError,
) -> SgStatus {
    guard(err, || {
        let g = read_boxes(gt, n, "gt")?;
        let d = read_boxes(det, n, "det")?;
        let loss = output(loss, n, "loss")?;
        let mut grad = if grad.is_null() { None } else { Some(output(grad, rows(n)?, "grad")?) };
        for i in 0..n {
            let lg = loss_gradient(&g[i], &d[i], LossKind::Fov);
            loss[i] = lg.loss.value;
            if let Some(gr) = grad.as_deref_mut() {
                gr[i * 4..i * 4 + 4].copy_from_slice(&lg.as_array());
            }
        }
        Ok(())
    })
}

/// Greedy single-category NMS. Writes kept row indices in score order to
/// `keep` (capacity `n`) and their count to `n_keep`.
///
/// # Safety
/// `boxes` must be valid for `n * 4` reads, `scores` and `keep` for `n`
/// reads/writes, `n_keep` for one write.
#[no_mangle]
pub unsafe extern "C" fn sg_batch_nms(
    boxes: *const f64,
    scores: *const f64,
    n: usize,
    iou_threshold: f64,
    m: SgMethod,
    keep: *mut usize,
    n_keep: *mut usize,
    err: *mut SgError,
) -> SgStatus {
    guard(err, || {
        if n_keep.is_null() {
            return Err(Failure::null("n_keep"));
        }
        let b = read_boxes(boxes, n, "boxes")?;
        let s = input(scores, n, "scores")?;
        let dets = b
            .iter()
            .zip(s)
            .enumerate()
            .map(|(i, (bb, &sc))| {
                Detection::new(0, 0, *bb, sc).map_err(|e| Failure {
                    code: SgStatus::InvalidArgument,
                    index: i as i64,
                    message: format!("row {i}: {e}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let kept = nms_indices(&dets, iou_threshold, method(m))
            .map_err(|e| Failure::new(SgStatus::InvalidArgument, e.to_string()))?;
        let out = output(keep, n, "keep")?;
        out[..kept.len()].copy_from_slice(&kept);
        *n_keep = kept.len();
        Ok(())
    })
}

/// A zeroed error record, for callers that want a starting value.
#[no_mangle]
pub extern "C" fn sg_error_empty() -> SgError {
    SgError {
        code: SgStatus::Ok,
        index: -1,
        message: [0; SG_MESSAGE_LEN],
    }
}

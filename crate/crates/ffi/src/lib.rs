//! C ABI over `numrange`: opaque handles, integer status codes and a
//! thread-local message for the last error.
//!
//! Every function returning [`NrStatus`] writes its results through out
//! pointers only on `NR_OK`. Handles are released with the matching `*_free`
//! function; passing null to a `*_free` function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use numrange::boundary::{BoundaryConfig, Classifier};
use numrange::cli::{parse_instance, round_json};
use numrange::geom::Vec3;
use numrange::hull::{convex_hull, ConvexPolytope3};
use numrange::models::{instance_by_name, InstanceSpec};
use numrange::ranges::{sample_pi, sample_pi_plus, seesaw_support, PointCloud3, SamplerConfig};
use numrange::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NrStatus {
    NrOk = 0,
    NrNullPointer = 1,
    NrInvalidArgument = 2,
    NrParse = 3,
    NrNotFound = 4,
    /// Operators failed validation (not Hermitian, wrong dimension, ...).
    NrValidation = 5,
    /// An optimizer or eigensolver did not converge.
    NrNumerical = 6,
    NrIo = 7,
    /// A Rust panic was caught at the boundary.
    NrPanic = 8,
}

/// Sampler settings, mirrored from the library defaults by
/// [`nr_sampler_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NrSamplerConfig {
    pub n_dirs: usize,
    pub n_grid_a: usize,
    pub n_grid_b: usize,
    pub seed: u64,
    pub restarts: usize,
    pub max_iters: usize,
}

impl From<NrSamplerConfig> for SamplerConfig {
    fn from(c: NrSamplerConfig) -> Self {
        SamplerConfig { n_dirs: c.n_dirs, n_grid_a: c.n_grid_a, n_grid_b: c.n_grid_b, seed: c.seed, restarts: c.restarts, max_iters: c.max_iters }
    }
}

/// An observable triple with its catalog metadata.
pub struct NrInstance(InstanceSpec);

/// A sampled point cloud.
pub struct NrCloud(PointCloud3);

/// A convex hull.
pub struct NrHull(ConvexPolytope3);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> NrStatus {
    match e.root() {
        Error::Parse { .. } => NrStatus::NrParse,
        Error::NotFound(_) => NrStatus::NrNotFound,
        Error::Io(_) => NrStatus::NrIo,
        Error::NotHermitian { .. }
        | Error::BadDim { .. }
        | Error::NonFinite
        | Error::NotSwapSymmetric { .. }
        | Error::NotNormalized { .. }
        | Error::NotHomogeneous { .. } => NrStatus::NrValidation,
        Error::NoConvergence { .. } | Error::DegenerateSlice => NrStatus::NrNumerical,
        _ => NrStatus::NrInvalidArgument,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Runs `f` behind a panic guard and turns its outcome into a status,
/// recording the message of any failure.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            NrStatus::NrOk
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            NrStatus::NrNullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| p.downcast_ref::<String>().cloned()).unwrap_or_default();
            set_error(&format!("internal error: {msg}"));
            NrStatus::NrPanic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Lib(Error::InvalidArgument(format!("{what} is not valid UTF-8"))))
}

unsafe fn vec3(p: *const f64, what: &'static str) -> Result<Vec3, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    let s = std::slice::from_raw_parts(p, 3);
    Ok(Vec3::new(s[0], s[1], s[2]))
}

fn unit(v: Vec3) -> Result<Vec3, Fail> {
    v.try_normalize(1e-300).filter(|u| u.iter().all(|x| x.is_finite())).ok_or(Fail::Lib(Error::InvalidArgument("direction must be nonzero and finite".into())))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn nr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn nr_sampler_config_default() -> NrSamplerConfig {
    let c = SamplerConfig::default();
    NrSamplerConfig { n_dirs: c.n_dirs, n_grid_a: c.n_grid_a, n_grid_b: c.n_grid_b, seed: c.seed, restarts: c.restarts, max_iters: c.max_iters }
}

/// Catalog instance by name (`oloid`, `cone`, `ising`, `xy`, `eg1`, `eg2`, `eg3`).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_instance_from_name(name: *const c_char, out_instance: *mut *mut NrInstance) -> NrStatus {
    guard(|| {
        let slot = out(out_instance, "out_instance")?;
        let spec = instance_by_name(text(name, "name")?)?;
        *slot = Box::into_raw(Box::new(NrInstance(spec)));
        Ok(())
    })
}

/// Instance from the JSON document accepted by the CLI's `--file`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_instance_from_json(json: *const c_char, out_instance: *mut *mut NrInstance) -> NrStatus {
    guard(|| {
        let slot = out(out_instance, "out_instance")?;
        let spec = parse_instance(text(json, "json")?, "instance")?;
        *slot = Box::into_raw(Box::new(NrInstance(spec)));
        Ok(())
    })
}

/// # Safety
/// `instance` must come from an `nr_instance_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nr_instance_free(instance: *mut NrInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// True when the instance's natural range is the symmetric one.
///
/// # Safety
/// `instance` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nr_instance_is_symmetric(instance: *const NrInstance) -> bool {
    instance.as_ref().is_some_and(|i| i.0.symmetric)
}

/// Π over the α × β Bloch grids of `config` (null for defaults).
///
/// # Safety
/// Pointers must be live handles or null; `out_cloud` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_sample_pi(instance: *const NrInstance, config: *const NrSamplerConfig, out_cloud: *mut *mut NrCloud) -> NrStatus {
    guard(|| {
        let slot = out(out_cloud, "out_cloud")?;
        let inst = deref(instance, "instance")?;
        let cfg = config.as_ref().map_or_else(SamplerConfig::default, |c| (*c).into());
        *slot = Box::into_raw(Box::new(NrCloud(sample_pi(&inst.0.triple, &cfg)?)));
        Ok(())
    })
}

/// Π₊ of a swap-symmetric instance.
///
/// # Safety
/// As for [`nr_sample_pi`].
#[no_mangle]
pub unsafe extern "C" fn nr_sample_pi_plus(instance: *const NrInstance, config: *const NrSamplerConfig, out_cloud: *mut *mut NrCloud) -> NrStatus {
    guard(|| {
        let slot = out(out_cloud, "out_cloud")?;
        let inst = deref(instance, "instance")?;
        let cfg = config.as_ref().map_or_else(SamplerConfig::default, |c| (*c).into());
        *slot = Box::into_raw(Box::new(NrCloud(sample_pi_plus(&inst.0.triple, &cfg)?)));
        Ok(())
    })
}

/// Number of points; 0 for null.
///
/// # Safety
/// `cloud` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nr_cloud_len(cloud: *const NrCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.0.len())
}

/// Copies the points as `x0,y0,z0,x1,...` into `buffer`, which must hold
/// `capacity >= 3 * nr_cloud_len(cloud)` doubles.
///
/// # Safety
/// `buffer` must be writable for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn nr_cloud_points(cloud: *const NrCloud, buffer: *mut f64, capacity: usize) -> NrStatus {
    guard(|| {
        let c = deref(cloud, "cloud")?;
        if buffer.is_null() {
            return Err(Fail::Null("buffer"));
        }
        let need = 3 * c.0.len();
        if capacity < need {
            return Err(Error::InvalidArgument(format!("buffer holds {capacity} doubles, {need} needed")).into());
        }
        let dst = std::slice::from_raw_parts_mut(buffer, need);
        for (chunk, p) in dst.chunks_exact_mut(3).zip(&c.0.points) {
            chunk.copy_from_slice(p.as_slice());
        }
        Ok(())
    })
}

/// # Safety
/// `cloud` must come from a sampler and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nr_cloud_free(cloud: *mut NrCloud) {
    if !cloud.is_null() {
        drop(Box::from_raw(cloud));
    }
}

/// # Safety
/// `cloud` must be a live handle; `out_hull` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_hull_build(cloud: *const NrCloud, out_hull: *mut *mut NrHull) -> NrStatus {
    guard(|| {
        let slot = out(out_hull, "out_hull")?;
        let c = deref(cloud, "cloud")?;
        *slot = Box::into_raw(Box::new(NrHull(convex_hull(&c.0)?)));
        Ok(())
    })
}

/// Maximum of `dir · v` over the hull (`dir` is normalized first).
///
/// # Safety
/// `dir` must point to 3 doubles; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_hull_support(hull: *const NrHull, dir: *const f64, out_value: *mut f64) -> NrStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        let h = deref(hull, "hull")?;
        *slot = h.0.support_value(&unit(vec3(dir, "dir")?)?);
        Ok(())
    })
}

/// Whether `point` lies in the hull within distance `eps`.
///
/// # Safety
/// `point` must point to 3 doubles; `out_inside` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_hull_contains(hull: *const NrHull, point: *const f64, eps: f64, out_inside: *mut bool) -> NrStatus {
    guard(|| {
        let slot = out(out_inside, "out_inside")?;
        let h = deref(hull, "hull")?;
        let q = vec3(point, "point")?;
        if !q.iter().all(|x| x.is_finite()) || eps.is_nan() || eps < 0.0 {
            return Err(Error::InvalidArgument("point must be finite and eps nonnegative".into()).into());
        }
        *slot = h.0.contains(&q, eps);
        Ok(())
    })
}

/// Affine rank of the hull (0-3); -1 for null.
///
/// # Safety
/// `hull` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nr_hull_rank(hull: *const NrHull) -> i32 {
    hull.as_ref().map_or(-1, |h| h.0.affine_rank as i32)
}

/// # Safety
/// `hull` must come from [`nr_hull_build`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nr_hull_free(hull: *mut NrHull) {
    if !hull.is_null() {
        drop(Box::from_raw(hull));
    }
}

/// Minimum of `dir · F` over product states by alternating minimization;
/// the minimizing point is written to `out_point` when it is not null.
///
/// # Safety
/// `dir` must point to 3 doubles, `out_point` to 3 writable doubles or null.
#[no_mangle]
pub unsafe extern "C" fn nr_seesaw_support(
    instance: *const NrInstance,
    dir: *const f64,
    config: *const NrSamplerConfig,
    out_value: *mut f64,
    out_point: *mut f64,
) -> NrStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        let inst = deref(instance, "instance")?;
        let cfg = config.as_ref().map_or_else(SamplerConfig::default, |c| (*c).into());
        let (value, state) = seesaw_support(&inst.0.triple, &unit(vec3(dir, "dir")?)?, &cfg)?;
        if !out_point.is_null() {
            let p = numrange::ranges::product_expectation(&inst.0.triple, &state)?;
            std::slice::from_raw_parts_mut(out_point, 3).copy_from_slice(p.as_slice());
        }
        *slot = value;
        Ok(())
    })
}

/// Runs the boundary classification with default boundary settings and
/// returns the report as a JSON string, released with [`nr_string_free`].
///
/// # Safety
/// Pointers must be live handles or null (config); `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_classify_json(instance: *const NrInstance, config: *const NrSamplerConfig, out_json: *mut *mut c_char) -> NrStatus {
    guard(|| {
        let slot = out(out_json, "out_json")?;
        let inst = deref(instance, "instance")?;
        let cfg = config.as_ref().map_or_else(SamplerConfig::default, |c| (*c).into());
        let c = Classifier::new(&inst.0.triple, inst.0.symmetric, &cfg, &BoundaryConfig::default())?;
        let report = serde_json::to_value(c.classify()?).expect("report serializes");
        let text = serde_json::to_string(&round_json(report)).expect("json");
        *slot = CString::new(text).expect("json has no nul").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

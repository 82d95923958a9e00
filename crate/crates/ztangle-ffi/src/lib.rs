//! C ABI for the ztangle library.
//!
//! Surfaces are exposed as opaque handles. Strings crossing the boundary are
//! NUL-terminated UTF-8; strings returned by the library must be released
//! with `zt_string_free`. All fallible calls return a `ZtStatus` code; `Ok`
//! is zero so the codes can be used as process exit statuses directly.

use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use ztangle::flips::{self, Direction, FlipKind, FlipRequest};
use ztangle::models::{Domain, Model, Spin};
use ztangle::partition::{check_z_invariance, partition_function, BoundaryAssignment};
use ztangle::report::{parse_coord_key, SurfaceFile, SCHEMA};
use ztangle::surface::{build_flat_surface, derive_spin_graph, validate_surface, Coord3, Surface};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ZtStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8 or not valid JSON.
    Parse = 2,
    /// Arguments were structurally valid but rejected (unknown model or
    /// flip name, wrong rapidity counts, boundary mismatch, ...).
    InvalidArgument = 3,
    /// The surface violates an invariant.
    InvalidSurface = 4,
    /// The flip does not apply at the given anchor.
    FlipRejected = 5,
    /// Evaluation failed (weight outside its validity range, interior too
    /// large for brute-force summation, ...).
    EvalFailed = 6,
}

/// Opaque handle to a surface.
pub struct ZtSurface {
    inner: Surface,
}

fn parse_cstr<'a>(p: *const c_char) -> Result<&'a str, ZtStatus> {
    if p.is_null() {
        return Err(ZtStatus::NullPointer);
    }
    unsafe { CStr::from_ptr(p) }.to_str().map_err(|_| ZtStatus::Parse)
}

fn to_cstring(s: String) -> *mut c_char {
    // JSON output never contains interior NULs.
    CString::new(s).unwrap().into_raw()
}

fn parse_model(name: *const c_char) -> Result<Model, ZtStatus> {
    Model::from_name(parse_cstr(name)?).ok_or(ZtStatus::InvalidArgument)
}

fn parse_boundary(json: *const c_char, model: Model) -> Result<BoundaryAssignment, ZtStatus> {
    let raw: BTreeMap<String, serde_json::Value> =
        serde_json::from_str(parse_cstr(json)?).map_err(|_| ZtStatus::Parse)?;
    let mut out = BoundaryAssignment::new();
    for (key, value) in raw {
        let coord: Coord3 = parse_coord_key(&key).map_err(|_| ZtStatus::Parse)?;
        let spin = match model.domain() {
            Domain::Discrete(n) => {
                let v = value.as_i64().ok_or(ZtStatus::Parse)?;
                Spin::D(v.rem_euclid(n as i64) as u32)
            }
            Domain::Continuous => Spin::C(value.as_f64().ok_or(ZtStatus::Parse)?),
        };
        out.insert(coord, spin);
    }
    Ok(out)
}

/// Build the flat `width` x `height` starting surface. `p_values` must hold
/// `height` entries and `q_values` `width` entries. Returns null on invalid
/// arguments. Free with `zt_surface_free`.
#[no_mangle]
pub extern "C" fn zt_surface_new_flat(
    width: usize,
    height: usize,
    p_values: *const f64,
    q_values: *const f64,
) -> *mut ZtSurface {
    if p_values.is_null() || q_values.is_null() {
        return ptr::null_mut();
    }
    let p = unsafe { std::slice::from_raw_parts(p_values, height) };
    let q = unsafe { std::slice::from_raw_parts(q_values, width) };
    match build_flat_surface(width, height, p, q) {
        Ok(s) => Box::into_raw(Box::new(ZtSurface { inner: s })),
        Err(_) => ptr::null_mut(),
    }
}

/// Deserialize a surface from its canonical JSON form. On success writes the
/// new handle to `out` and returns `Ok`.
#[no_mangle]
pub extern "C" fn zt_surface_from_json(json: *const c_char, out: *mut *mut ZtSurface) -> ZtStatus {
    if out.is_null() {
        return ZtStatus::NullPointer;
    }
    let text = match parse_cstr(json) {
        Ok(t) => t,
        Err(e) => return e,
    };
    let file: SurfaceFile = match serde_json::from_str(text) {
        Ok(f) => f,
        Err(_) => return ZtStatus::Parse,
    };
    if file.schema != SCHEMA {
        return ZtStatus::InvalidArgument;
    }
    unsafe { *out = Box::into_raw(Box::new(ZtSurface { inner: file.surface })) };
    ZtStatus::Ok
}

/// Serialize the surface to its canonical JSON form. Returns a string owned
/// by the caller (release with `zt_string_free`), or null if `s` is null.
#[no_mangle]
pub extern "C" fn zt_surface_to_json(s: *const ZtSurface) -> *mut c_char {
    if s.is_null() {
        return ptr::null_mut();
    }
    let surface = &unsafe { &*s }.inner;
    let file = SurfaceFile { schema: SCHEMA.to_string(), surface: surface.clone() };
    to_cstring(serde_json::to_string_pretty(&file).unwrap())
}

/// Check all surface invariants. Returns `Ok` for a valid surface and
/// `InvalidSurface` otherwise; use `zt_surface_violations` for details.
#[no_mangle]
pub extern "C" fn zt_surface_validate(s: *const ZtSurface) -> ZtStatus {
    if s.is_null() {
        return ZtStatus::NullPointer;
    }
    let report = validate_surface(&unsafe { &*s }.inner);
    if report.ok {
        ZtStatus::Ok
    } else {
        ZtStatus::InvalidSurface
    }
}

/// JSON array of human-readable invariant violations (empty for a valid
/// surface). Caller frees with `zt_string_free`; null if `s` is null.
#[no_mangle]
pub extern "C" fn zt_surface_violations(s: *const ZtSurface) -> *mut c_char {
    if s.is_null() {
        return ptr::null_mut();
    }
    let report = validate_surface(&unsafe { &*s }.inner);
    to_cstring(serde_json::to_string(&report.violations).unwrap())
}

/// Apply one local rewrite in place. `kind` is the template name ("F15A",
/// "F24_3", "F33_2", ...), `inverse` selects the inverse move, and
/// `(i, j, k)` is the anchor cell. `r_value` is consumed only when the
/// template introduces a new loop (`has_r` must be true in that case).
#[no_mangle]
pub extern "C" fn zt_flip_apply(
    s: *mut ZtSurface,
    kind: *const c_char,
    inverse: bool,
    i: i64,
    j: i64,
    k: i64,
    r_value: f64,
    has_r: bool,
) -> ZtStatus {
    if s.is_null() {
        return ZtStatus::NullPointer;
    }
    let kind_name = match parse_cstr(kind) {
        Ok(t) => t,
        Err(e) => return e,
    };
    let kind: FlipKind = match serde_json::from_value(serde_json::Value::String(kind_name.into())) {
        Ok(k) => k,
        Err(_) => return ZtStatus::InvalidArgument,
    };
    let direction = if inverse { Direction::Inverse } else { Direction::Forward };
    let handle = unsafe { &mut *s };
    let request = FlipRequest {
        flip: kind,
        direction,
        anchor: Coord3(i, j, k),
        r_value: if has_r { Some(r_value) } else { None },
    };
    match flips::run_script(&handle.inner, &[request]) {
        Ok((next, _)) => {
            handle.inner = next;
            ZtStatus::Ok
        }
        Err(_) => ZtStatus::FlipRejected,
    }
}

/// Brute-force partition function of the surface's spin graph under the
/// named model ("ising" or "fishingnet"). `boundary_json` maps "[i,j,k]"
/// keys to boundary spin values. Writes the complex result to `out_re`,
/// `out_im`.
#[no_mangle]
pub extern "C" fn zt_partition(
    s: *const ZtSurface,
    model: *const c_char,
    boundary_json: *const c_char,
    out_re: *mut f64,
    out_im: *mut f64,
) -> ZtStatus {
    if s.is_null() || out_re.is_null() || out_im.is_null() {
        return ZtStatus::NullPointer;
    }
    let model = match parse_model(model) {
        Ok(m) => m,
        Err(e) => return e,
    };
    let boundary = match parse_boundary(boundary_json, model) {
        Ok(b) => b,
        Err(e) => return e,
    };
    let g = match derive_spin_graph(&unsafe { &*s }.inner) {
        Ok(g) => g,
        Err(_) => return ZtStatus::InvalidSurface,
    };
    match partition_function(&g, model, &boundary) {
        Ok(z) => {
            unsafe {
                *out_re = z.re;
                *out_im = z.im;
            }
            ZtStatus::Ok
        }
        Err(_) => ZtStatus::EvalFailed,
    }
}

/// Run a flip script (JSON array of `{"flip", "direction", "anchor",
/// "r_value"}` objects) against the surface, then compare the rewritten
/// partition function with the accumulated ledger factor times the original.
/// Writes the relative residual to `out_residual`.
#[no_mangle]
pub extern "C" fn zt_z_invariance(
    s: *const ZtSurface,
    script_json: *const c_char,
    model: *const c_char,
    boundary_json: *const c_char,
    out_residual: *mut f64,
) -> ZtStatus {
    if s.is_null() || out_residual.is_null() {
        return ZtStatus::NullPointer;
    }
    let script: Vec<FlipRequest> = match parse_cstr(script_json).and_then(|t| {
        serde_json::from_str(t).map_err(|_| ZtStatus::Parse)
    }) {
        Ok(v) => v,
        Err(e) => return e,
    };
    let model = match parse_model(model) {
        Ok(m) => m,
        Err(e) => return e,
    };
    let boundary = match parse_boundary(boundary_json, model) {
        Ok(b) => b,
        Err(e) => return e,
    };
    match check_z_invariance(&unsafe { &*s }.inner, &script, model, &boundary) {
        Ok(report) => {
            unsafe { *out_residual = report.residual };
            ZtStatus::Ok
        }
        Err(_) => ZtStatus::EvalFailed,
    }
}

/// Release a surface handle. Null is a no-op.
#[no_mangle]
pub extern "C" fn zt_surface_free(s: *mut ZtSurface) {
    if !s.is_null() {
        drop(unsafe { Box::from_raw(s) });
    }
}

/// Release a string previously returned by this library. Null is a no-op.
#[no_mangle]
pub extern "C" fn zt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

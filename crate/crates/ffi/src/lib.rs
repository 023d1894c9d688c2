//! C ABI for the diskconf library: opaque handles, integer status codes, a
//! thread-local last-error message, and plain-array accessors. The header
//! `include/diskconf.h` is generated at build time by cbindgen.
//!
//! Ownership rules: every `*_new`/`*_load`/`diskconf_parameterize` output
//! must be released with the matching `*_free`. Handles are not shared
//! across threads while being freed; read-only use from several threads is
//! fine.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use diskconf::pipeline::DiskParameterization;
use diskconf::{Error, MeshFormat, PipelineOptions, TriMesh};

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiskconfStatus {
    Ok = 0,
    NullArgument = 1,
    Utf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidMesh = 5,
    NotDiskTopology = 6,
    SolverFailed = 7,
    FlippedFaces = 8,
    InvalidArgument = 9,
    BufferTooSmall = 10,
    Internal = 11,
}

/// Opaque triangle mesh handle.
pub struct DiskconfMesh {
    mesh: TriMesh,
}

/// Opaque parameterization handle (per-vertex uv over the source mesh).
pub struct DiskconfParam {
    param: DiskParameterization,
}

/// Pipeline options; obtain defaults from [`diskconf_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DiskconfOptions {
    pub skip_south_pole: bool,
    /// Relative residual tolerance of the linear solves, in (0, 1e-4].
    pub solver_tolerance: f64,
}

/// Quality summary of a parameterization.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DiskconfMetrics {
    pub mean_abs_distortion_deg: f64,
    pub sd_abs_distortion_deg: f64,
    pub flipped_faces: u64,
    /// Maximal dilation; +inf when some |mu| >= 1.
    pub max_dilation: f64,
    pub boundary_simple: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let cstring =
        CString::new(message).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstring));
}

fn status_of(err: &Error) -> DiskconfStatus {
    match err {
        Error::Io { .. } => DiskconfStatus::Io,
        Error::Parse { .. } => DiskconfStatus::Parse,
        Error::IndexOutOfRange { .. }
        | Error::RepeatedIndex { .. }
        | Error::DegenerateFaces { .. }
        | Error::NonManifoldEdge { .. }
        | Error::InconsistentOrientation { .. }
        | Error::NonManifoldVertex { .. }
        | Error::Disconnected { .. }
        | Error::CountMismatch { .. }
        | Error::FaceCountMismatch { .. } => DiskconfStatus::InvalidMesh,
        Error::NotDiskTopology { .. } | Error::BoundaryLoopCount { .. } => {
            DiskconfStatus::NotDiskTopology
        }
        Error::FlippedFaces { .. } | Error::InteriorOutsideDisk { .. } => {
            DiskconfStatus::FlippedFaces
        }
        Error::Config(_) => DiskconfStatus::InvalidArgument,
        Error::Stage { source, .. } => status_of(source),
        _ => DiskconfStatus::SolverFailed,
    }
}

fn fail(err: Error) -> DiskconfStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

fn guard<F: FnOnce() -> DiskconfStatus>(f: F) -> DiskconfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic".into());
            DiskconfStatus::Internal
        }
    }
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, DiskconfStatus> {
    if path.is_null() {
        set_error("path is null".into());
        return Err(DiskconfStatus::NullArgument);
    }
    match CStr::from_ptr(path).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_error("path is not valid UTF-8".into());
            Err(DiskconfStatus::Utf8)
        }
    }
}

/// Message describing the most recent failure on this thread, or an empty
/// string. The pointer stays valid until the next failing call on the same
/// thread.
#[no_mangle]
pub extern "C" fn diskconf_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(msg) => msg.as_ptr(),
        None => c"".as_ptr(),
    })
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn diskconf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

#[no_mangle]
pub extern "C" fn diskconf_options_default() -> DiskconfOptions {
    DiskconfOptions {
        skip_south_pole: false,
        solver_tolerance: 1e-10,
    }
}

/// Load an OBJ or OFF mesh (format detected from the extension/content).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn diskconf_mesh_load(
    path: *const c_char,
    out: *mut *mut DiskconfMesh,
) -> DiskconfStatus {
    guard(|| {
        if out.is_null() {
            set_error("out is null".into());
            return DiskconfStatus::NullArgument;
        }
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match diskconf::load_mesh(&path, MeshFormat::Auto) {
            Ok(mesh) => {
                *out = Box::into_raw(Box::new(DiskconfMesh { mesh }));
                DiskconfStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Build a mesh from arrays: `vertices` is 3*n_vertices doubles (xyz),
/// `faces` is 3*n_faces zero-based indices.
///
/// # Safety
/// The arrays must match the stated lengths; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn diskconf_mesh_create(
    vertices: *const f64,
    n_vertices: u64,
    faces: *const u64,
    n_faces: u64,
    out: *mut *mut DiskconfMesh,
) -> DiskconfStatus {
    guard(|| {
        if vertices.is_null() || faces.is_null() || out.is_null() {
            set_error("null argument".into());
            return DiskconfStatus::NullArgument;
        }
        let vs = std::slice::from_raw_parts(vertices, (n_vertices as usize) * 3);
        let fs = std::slice::from_raw_parts(faces, (n_faces as usize) * 3);
        let points = vs
            .chunks_exact(3)
            .map(|c| nalgebra::Point3::new(c[0], c[1], c[2]))
            .collect();
        let triangles = fs
            .chunks_exact(3)
            .map(|c| [c[0] as usize, c[1] as usize, c[2] as usize])
            .collect();
        match TriMesh::new(points, triangles) {
            Ok(mesh) => {
                *out = Box::into_raw(Box::new(DiskconfMesh { mesh }));
                DiskconfStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// # Safety
/// `mesh` must come from a load/create call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn diskconf_mesh_free(mesh: *mut DiskconfMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// # Safety
/// `mesh` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn diskconf_mesh_vertex_count(mesh: *const DiskconfMesh) -> u64 {
    if mesh.is_null() {
        return 0;
    }
    (*mesh).mesh.vertex_count() as u64
}

/// # Safety
/// `mesh` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn diskconf_mesh_face_count(mesh: *const DiskconfMesh) -> u64 {
    if mesh.is_null() {
        return 0;
    }
    (*mesh).mesh.face_count() as u64
}

/// Compute the disk conformal parameterization. `options` may be null for
/// defaults.
///
/// # Safety
/// `mesh` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn diskconf_parameterize(
    mesh: *const DiskconfMesh,
    options: *const DiskconfOptions,
    out: *mut *mut DiskconfParam,
) -> DiskconfStatus {
    guard(|| {
        if mesh.is_null() || out.is_null() {
            set_error("null argument".into());
            return DiskconfStatus::NullArgument;
        }
        let opts = if options.is_null() {
            diskconf_options_default()
        } else {
            *options
        };
        if !(opts.solver_tolerance > 0.0 && opts.solver_tolerance <= 1e-4) {
            set_error(format!(
                "solver tolerance must be in (0, 1e-4], got {}",
                opts.solver_tolerance
            ));
            return DiskconfStatus::InvalidArgument;
        }
        let pipeline_options = PipelineOptions {
            skip_south_pole: opts.skip_south_pole,
            solver_tolerance: opts.solver_tolerance,
        };
        match diskconf::disk_conformal_parameterize(&(*mesh).mesh, &pipeline_options) {
            Ok(param) => {
                *out = Box::into_raw(Box::new(DiskconfParam { param }));
                DiskconfStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// # Safety
/// `param` must come from `diskconf_parameterize` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn diskconf_param_free(param: *mut DiskconfParam) {
    if !param.is_null() {
        drop(Box::from_raw(param));
    }
}

/// Copy the uv coordinates into `out` as interleaved (u, v) pairs.
/// `capacity` is the number of doubles available; it must be at least
/// twice the vertex count.
///
/// # Safety
/// `out` must point to at least `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn diskconf_param_uv(
    param: *const DiskconfParam,
    out: *mut f64,
    capacity: u64,
) -> DiskconfStatus {
    guard(|| {
        if param.is_null() || out.is_null() {
            set_error("null argument".into());
            return DiskconfStatus::NullArgument;
        }
        let uv = (*param).param.uv().coords();
        let needed = uv.len() * 2;
        if (capacity as usize) < needed {
            set_error(format!(
                "buffer holds {capacity} doubles, {needed} required"
            ));
            return DiskconfStatus::BufferTooSmall;
        }
        let slice = std::slice::from_raw_parts_mut(out, needed);
        for (i, z) in uv.iter().enumerate() {
            slice[2 * i] = z.re;
            slice[2 * i + 1] = z.im;
        }
        DiskconfStatus::Ok
    })
}

/// Number of linear systems factored while computing `param`.
///
/// # Safety
/// `param` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn diskconf_param_systems_factored(param: *const DiskconfParam) -> u64 {
    if param.is_null() {
        return 0;
    }
    (*param).param.provenance().systems_factored as u64
}

/// Evaluate distortion/bijectivity metrics of `param` against `mesh`.
///
/// # Safety
/// All handles must be valid; `out` must point to a `DiskconfMetrics`.
#[no_mangle]
pub unsafe extern "C" fn diskconf_param_metrics(
    mesh: *const DiskconfMesh,
    param: *const DiskconfParam,
    out: *mut DiskconfMetrics,
) -> DiskconfStatus {
    guard(|| {
        if mesh.is_null() || param.is_null() || out.is_null() {
            set_error("null argument".into());
            return DiskconfStatus::NullArgument;
        }
        let mesh = &(*mesh).mesh;
        let uv = (*param).param.uv();
        let distortion = match diskconf::angular_distortion(mesh, uv) {
            Ok(d) => d,
            Err(err) => return fail(err),
        };
        let bijectivity = match diskconf::bijectivity_report(mesh, uv) {
            Ok(b) => b,
            Err(err) => return fail(err),
        };
        let dilation = match diskconf::conformality_stats(mesh, uv) {
            Ok(d) => d,
            Err(err) => return fail(err),
        };
        *out = DiskconfMetrics {
            mean_abs_distortion_deg: distortion.mean_abs_deg,
            sd_abs_distortion_deg: distortion.sd_abs_deg,
            flipped_faces: bijectivity.flip_count() as u64,
            max_dilation: dilation.k,
            boundary_simple: bijectivity.boundary_simple,
        };
        DiskconfStatus::Ok
    })
}

/// Write an OBJ with `vt` records for the parameterized mesh.
///
/// # Safety
/// Handles must be valid; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn diskconf_param_write_obj(
    mesh: *const DiskconfMesh,
    param: *const DiskconfParam,
    path: *const c_char,
) -> DiskconfStatus {
    guard(|| {
        if mesh.is_null() || param.is_null() {
            set_error("null argument".into());
            return DiskconfStatus::NullArgument;
        }
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match diskconf::write_mesh_with_uv(&path, &(*mesh).mesh, (*param).param.uv().coords()) {
            Ok(()) => DiskconfStatus::Ok,
            Err(err) => fail(err),
        }
    })
}

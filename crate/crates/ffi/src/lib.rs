//! C ABI over the `pixelate` library.
//!
//! Grids and pixelation results are opaque handles created by `px_*` functions
//! and released with the matching `*_free`. Every fallible call returns a
//! [`PxStatus`]; on failure a description is available from
//! [`px_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pixelate::io::{self, SummaryFormat};
use pixelate::pipeline::{self, Pixelation, PixelationParams};
use pixelate::render::{self, RenderConfig};
use pixelate::{synth, DisplayCell, Error, LatticeSpec, PredictionGrid, ScaleMode};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    IrregularLattice = 5,
    DuplicateCoordinate = 6,
    InvalidValue = 7,
    GridTooSmall = 8,
    LadderOverflow = 9,
    InconsistentInputs = 10,
    UnknownDataset = 11,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PxScale {
    Imult = 0,
    Iexpn = 1,
}

/// Pixelation parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PxParams {
    pub num_sizes: u32,
    pub scale: PxScale,
    pub factor: u64,
    pub min_big_x: u32,
    pub min_big_y: u32,
}

impl From<PxParams> for PixelationParams {
    fn from(p: PxParams) -> Self {
        PixelationParams {
            num_sizes: p.num_sizes as usize,
            scale: match p.scale {
                PxScale::Imult => ScaleMode::Imult,
                PxScale::Iexpn => ScaleMode::Iexpn,
            },
            factor: p.factor,
            min_big: (p.min_big_x as usize, p.min_big_y as usize),
        }
    }
}

/// Opaque prediction grid.
pub struct PxGrid(PredictionGrid);

/// Opaque pixelation result.
pub struct PxResult(Pixelation);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> PxStatus {
    match err.root() {
        Error::Io { .. } => PxStatus::Io,
        Error::SchemaError(_)
        | Error::ParseError { .. }
        | Error::HeaderMismatch(_)
        | Error::EmptyInput => PxStatus::Parse,
        Error::IrregularLattice { .. } => PxStatus::IrregularLattice,
        Error::DuplicateCoordinate { .. } => PxStatus::DuplicateCoordinate,
        Error::NegativeUncertainty { .. }
        | Error::NonFiniteValue { .. }
        | Error::InvertedInterval { .. }
        | Error::EmptyValues => PxStatus::InvalidValue,
        Error::GridTooSmall { .. } => PxStatus::GridTooSmall,
        Error::LadderOverflow { .. } => PxStatus::LadderOverflow,
        Error::InconsistentInputs(_) | Error::BoundaryMismatch { .. } => {
            PxStatus::InconsistentInputs
        }
        Error::UnknownDataset(_) => PxStatus::UnknownDataset,
        Error::InvalidParameter(_) | Error::Encode(_) | Error::AtLine { .. } => {
            PxStatus::InvalidArgument
        }
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), PxStatus>) -> PxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PxStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic".into());
            PxStatus::Panic
        }
    }
}

fn fail(err: Error) -> PxStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

fn null(what: &str) -> PxStatus {
    set_error(format!("{what} is null"));
    PxStatus::NullPointer
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, PxStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        PxStatus::InvalidArgument
    })
}

unsafe fn store<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn px_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread, or NULL if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn px_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Fills `out` with the default parameters (6 sizes, imult, factor 1, 12x12 big pixels).
///
/// # Safety
/// `out` must be null or point to writable memory for one `PxParams`.
#[no_mangle]
pub unsafe extern "C" fn px_params_default(out: *mut PxParams) -> PxStatus {
    if out.is_null() {
        return null("out");
    }
    let d = PixelationParams::default();
    *out = PxParams {
        num_sizes: d.num_sizes as u32,
        scale: PxScale::Imult,
        factor: d.factor,
        min_big_x: d.min_big.0 as u32,
        min_big_y: d.min_big.1 as u32,
    };
    PxStatus::Ok
}

/// Builds a grid from two row-major layers of `n_x * n_y` values, lower-left cell first.
/// NaN in either layer marks a cell missing.
///
/// # Safety
/// `values` and `uncertainties` must each point to `n_x * n_y` readable doubles;
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn px_grid_from_layers(
    n_x: usize,
    n_y: usize,
    origin_x: f64,
    origin_y: f64,
    cell_w: f64,
    cell_h: f64,
    values: *const f64,
    uncertainties: *const f64,
    zero_tol: f64,
    out: *mut *mut PxGrid,
) -> PxStatus {
    guard(|| {
        if values.is_null() || uncertainties.is_null() || out.is_null() {
            return Err(null("layer or output pointer"));
        }
        let spec = LatticeSpec::new(origin_x, origin_y, cell_w, cell_h, n_x, n_y).map_err(fail)?;
        let n = spec.len();
        let v = std::slice::from_raw_parts(values, n);
        let u = std::slice::from_raw_parts(uncertainties, n);
        let grid = PredictionGrid::from_layers(spec, v, u, zero_tol).map_err(fail)?;
        store(out, PxGrid(grid));
        Ok(())
    })
}

/// Reads an `x,y,z,u` or `x,y,z,z_lo,z_hi` CSV.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn px_grid_read_csv(
    path: *const c_char,
    zero_tol: f64,
    out: *mut *mut PxGrid,
) -> PxStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let grid = io::read_csv(path, zero_tol).map_err(fail)?;
        store(out, PxGrid(grid));
        Ok(())
    })
}

/// Reads a prediction and an uncertainty ESRI ASCII grid with identical headers.
///
/// # Safety
/// `z_path` and `u_path` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn px_grid_read_ascii_pair(
    z_path: *const c_char,
    u_path: *const c_char,
    zero_tol: f64,
    out: *mut *mut PxGrid,
) -> PxStatus {
    guard(|| {
        let z = str_arg(z_path, "z_path")?;
        let u = str_arg(u_path, "u_path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let grid = io::read_ascii_grid_pair(z, u, zero_tol).map_err(fail)?;
        store(out, PxGrid(grid));
        Ok(())
    })
}

/// Generates a bundled synthetic dataset (`demo_small` or `demo_acceptance`).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn px_grid_bundled(name: *const c_char, out: *mut *mut PxGrid) -> PxStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let grid = synth::bundled_dataset(name).map_err(fail)?;
        store(out, PxGrid(grid));
        Ok(())
    })
}

/// # Safety
/// `grid` must be a live handle; `n_x` and `n_y` must be writable.
#[no_mangle]
pub unsafe extern "C" fn px_grid_dims(
    grid: *const PxGrid,
    n_x: *mut usize,
    n_y: *mut usize,
) -> PxStatus {
    if grid.is_null() || n_x.is_null() || n_y.is_null() {
        return null("argument");
    }
    let spec = (*grid).0.spec();
    *n_x = spec.n_x;
    *n_y = spec.n_y;
    PxStatus::Ok
}

/// # Safety
/// `grid` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn px_grid_free(grid: *mut PxGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Runs the full pixelation. `params` may be null for the defaults.
///
/// # Safety
/// `grid` must be a live handle, `params` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn px_pixelate(
    grid: *const PxGrid,
    params: *const PxParams,
    out: *mut *mut PxResult,
) -> PxStatus {
    guard(|| {
        if grid.is_null() || out.is_null() {
            return Err(null("grid or out"));
        }
        let params = if params.is_null() {
            PixelationParams::default()
        } else {
            (*params).into()
        };
        let result = pipeline::run(&(*grid).0, &params).map_err(fail)?;
        store(out, PxResult(result));
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn px_result_free(result: *mut PxResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Copies up to `capacity` ladder sides into `out` and returns the ladder length.
///
/// # Safety
/// `result` must be a live handle; `out` must hold `capacity` u64 values (or be null with capacity 0).
#[no_mangle]
pub unsafe extern "C" fn px_result_ladder(
    result: *const PxResult,
    out: *mut u64,
    capacity: usize,
) -> usize {
    if result.is_null() {
        return 0;
    }
    let sizes = (*result).0.ladder.sizes();
    if !out.is_null() {
        let n = sizes.len().min(capacity);
        ptr::copy_nonoverlapping(sizes.as_ptr(), out, n);
    }
    sizes.len()
}

/// # Safety
/// `result` must be a live handle; `n_big_x` and `n_big_y` must be writable.
#[no_mangle]
pub unsafe extern "C" fn px_result_big_pixels(
    result: *const PxResult,
    n_big_x: *mut usize,
    n_big_y: *mut usize,
) -> PxStatus {
    if result.is_null() || n_big_x.is_null() || n_big_y.is_null() {
        return null("argument");
    }
    let p = &(*result).0.partition;
    *n_big_x = p.n_big_x;
    *n_big_y = p.n_big_y;
    PxStatus::Ok
}

/// Whether every big pixel had the same average uncertainty (map fully resolved).
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn px_result_is_degenerate(result: *const PxResult) -> bool {
    !result.is_null() && (*result).0.alloc.degenerate
}

/// Number of nested pixels in the result.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn px_result_num_pixels(result: *const PxResult) -> usize {
    if result.is_null() {
        return 0;
    }
    (*result).0.pixelated.pixels.len()
}

/// Writes per-cell display values and size classes, row-major from the lower-left.
/// Missing cells get NaN and class 0; zero-with-certainty cells get 0.0 and class 0.
/// Either output may be null.
///
/// # Safety
/// `result` must be a live handle; non-null outputs must hold `len` elements, and
/// `len` must equal the number of cells.
#[no_mangle]
pub unsafe extern "C" fn px_result_display(
    result: *const PxResult,
    values: *mut f64,
    size_classes: *mut u32,
    len: usize,
) -> PxStatus {
    if result.is_null() {
        return null("result");
    }
    let cells = &(*result).0.pixelated.cells;
    if len != cells.len() {
        set_error(format!(
            "buffer holds {len} cells, result has {}",
            cells.len()
        ));
        return PxStatus::InvalidArgument;
    }
    for (idx, cell) in cells.iter().enumerate() {
        let (v, k) = match *cell {
            DisplayCell::Pixel {
                value, size_class, ..
            } => (value, size_class as u32),
            DisplayCell::Missing => (f64::NAN, 0),
            DisplayCell::CertainZero => (0.0, 0),
        };
        if !values.is_null() {
            *values.add(idx) = v;
        }
        if !size_classes.is_null() {
            *size_classes.add(idx) = k;
        }
    }
    PxStatus::Ok
}

/// Writes the per-cell pixelated CSV.
///
/// # Safety
/// `result` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn px_result_write_pixelated_csv(
    result: *const PxResult,
    path: *const c_char,
) -> PxStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if result.is_null() {
            return Err(null("result"));
        }
        io::write_pixelated_csv(&(*result).0.pixelated, path).map_err(fail)
    })
}

/// Writes the summary table as CSV, or as a markdown table when `markdown` is true.
///
/// # Safety
/// `result` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn px_result_write_summary(
    result: *const PxResult,
    path: *const c_char,
    markdown: bool,
) -> PxStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if result.is_null() {
            return Err(null("result"));
        }
        let format = if markdown {
            SummaryFormat::Markdown
        } else {
            SummaryFormat::Csv
        };
        io::write_summary(&(*result).0.summary, path, format).map_err(fail)
    })
}

fn write_file(path: &str, bytes: &[u8]) -> Result<(), PxStatus> {
    std::fs::write(path, bytes).map_err(|e| {
        set_error(format!("{path}: {e}"));
        PxStatus::Io
    })
}

/// Renders the pixelated map as PNG with the default palette.
///
/// # Safety
/// `result` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn px_result_write_map_png(
    result: *const PxResult,
    path: *const c_char,
    px_per_cell: u32,
) -> PxStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if result.is_null() {
            return Err(null("result"));
        }
        let config = RenderConfig {
            px_per_cell: px_per_cell as usize,
            ..Default::default()
        };
        let png = render::render_map(&(*result).0.pixelated, &config).map_err(fail)?;
        write_file(path, &png)
    })
}

/// Renders the quantile-interval allocation map as PNG.
///
/// # Safety
/// `result` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn px_result_write_alloc_png(
    result: *const PxResult,
    path: *const c_char,
    px_per_cell: u32,
) -> PxStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if result.is_null() {
            return Err(null("result"));
        }
        let r = &(*result).0;
        let config = RenderConfig {
            px_per_cell: px_per_cell as usize,
            ..Default::default()
        };
        let png = render::render_allocation(&r.partition, &r.alloc, &config).map_err(fail)?;
        write_file(path, &png)
    })
}

//! C ABI over the skycat engine.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every fallible call returns a
//! [`SkycatStatus`]; on failure, [`skycat_last_error`] describes the most
//! recent error on the calling thread. Panics are caught and reported as
//! [`SkycatStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use skycat::catalog::{Catalog, TableName};
use skycat::htm::{id_to_name, lookup_id, name_to_id, TrixelId};
use skycat::loader::{self, EventStatus, Journal};
use skycat::queries::{self, NearbyHit};
use skycat::region::{cover, Cap, HtmRangeSet};
use skycat::sphere::{arc_angle, EquatorialCoord};
use skycat::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SkycatStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    DepthLimit = 4,
    Encoding = 5,
    Geometry = 6,
    Config = 7,
    Io = 8,
    Format = 9,
    VersionMismatch = 10,
    Truncated = 11,
    DigestMismatch = 12,
    UnknownEvent = 13,
    AlreadyUndone = 14,
    UndoConflict = 15,
    BufferTooSmall = 16,
    OutOfRange = 17,
    Other = 18,
    Panic = 19,
}

impl From<&Error> for SkycatStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => SkycatStatus::Domain,
            Error::DepthLimit { .. } | Error::DepthMismatch { .. } => SkycatStatus::DepthLimit,
            Error::Encoding(_) | Error::NameParse(_) => SkycatStatus::Encoding,
            Error::Geometry(_) => SkycatStatus::Geometry,
            Error::Config(_) | Error::UnknownFlag { .. } | Error::UnknownTable(_) | Error::UnknownPredicate(_) => {
                SkycatStatus::Config
            }
            Error::Io { .. } => SkycatStatus::Io,
            Error::Format(_) | Error::Journal(_) => SkycatStatus::Format,
            Error::VersionMismatch { .. } => SkycatStatus::VersionMismatch,
            Error::Truncated => SkycatStatus::Truncated,
            Error::DigestMismatch { .. } => SkycatStatus::DigestMismatch,
            Error::UnknownEvent(_) => SkycatStatus::UnknownEvent,
            Error::AlreadyUndone(_) => SkycatStatus::AlreadyUndone,
            Error::UndoConflict { .. } => SkycatStatus::UndoConflict,
            #[allow(unreachable_patterns)]
            _ => SkycatStatus::Other,
        }
    }
}

/// Tables addressable through the C API.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SkycatTable {
    Field = 0,
    Plate = 1,
    PhotoObj = 2,
    SpecObj = 3,
    SpecLine = 4,
    Neighbors = 5,
}

impl From<SkycatTable> for TableName {
    fn from(t: SkycatTable) -> Self {
        match t {
            SkycatTable::Field => TableName::Field,
            SkycatTable::Plate => TableName::Plate,
            SkycatTable::PhotoObj => TableName::PhotoObj,
            SkycatTable::SpecObj => TableName::SpecObj,
            SkycatTable::SpecLine => TableName::SpecLine,
            SkycatTable::Neighbors => TableName::Neighbors,
        }
    }
}

/// A catalog plus the in-memory journal of loads made through this handle.
pub struct SkycatCatalog {
    catalog: Catalog,
    journal: Journal,
}

pub struct SkycatRangeSet(HtmRangeSet);

pub struct SkycatHits(Vec<NearbyHit>);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SkycatHit {
    pub obj_id: u64,
    /// Arcminutes.
    pub distance: f64,
}

/// Summary of one load. `status` is 0 for ok, 1 for failed.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SkycatLoadResult {
    pub event_id: u64,
    pub source_rows: u64,
    pub inserted_rows: u64,
    pub rejected_rows: u64,
    pub status: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (SkycatStatus, String)>) -> SkycatStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SkycatStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside skycat".into());
            SkycatStatus::Panic
        }
    }
}

fn lib(e: Error) -> (SkycatStatus, String) {
    ((&e).into(), e.to_string())
}

fn null(what: &str) -> (SkycatStatus, String) {
    (SkycatStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (SkycatStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, (SkycatStatus, String)> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (SkycatStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
    Ok(PathBuf::from(s))
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn skycat_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Trixel id containing (ra, dec) at `depth`.
///
/// # Safety
/// `id_out` must be a valid pointer to writable memory for one `u64`.
#[no_mangle]
pub unsafe extern "C" fn skycat_lookup_id(ra: f64, dec: f64, depth: u32, id_out: *mut u64) -> SkycatStatus {
    guard(|| {
        let v = EquatorialCoord::new(ra, dec).map_err(lib)?.to_vec();
        *out(id_out, "id_out")? = lookup_id(&v, depth).map_err(lib)?.raw();
        Ok(())
    })
}

/// Writes the NUL-terminated name of `id` into `buf` of `len` bytes.
///
/// # Safety
/// `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn skycat_id_to_name(id: u64, buf: *mut c_char, len: usize) -> SkycatStatus {
    guard(|| {
        if buf.is_null() {
            return Err(null("buf"));
        }
        let name = id_to_name(TrixelId::new(id).map_err(lib)?);
        if name.len() + 1 > len {
            return Err((
                SkycatStatus::BufferTooSmall,
                format!("name needs {} bytes", name.len() + 1),
            ));
        }
        ptr::copy_nonoverlapping(name.as_ptr().cast::<c_char>(), buf, name.len());
        *buf.add(name.len()) = 0;
        Ok(())
    })
}

/// Parses a trixel name such as `N0123`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `id_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skycat_name_to_id(name: *const c_char, id_out: *mut u64) -> SkycatStatus {
    guard(|| {
        if name.is_null() {
            return Err(null("name"));
        }
        let s = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| (SkycatStatus::Encoding, "name is not UTF-8".to_string()))?;
        *out(id_out, "id_out")? = name_to_id(s).map_err(lib)?.raw();
        Ok(())
    })
}

/// Angular separation in arcminutes.
///
/// # Safety
/// `arcmin_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skycat_arc_angle(
    ra1: f64,
    dec1: f64,
    ra2: f64,
    dec2: f64,
    arcmin_out: *mut f64,
) -> SkycatStatus {
    guard(|| {
        let a = EquatorialCoord::new(ra1, dec1).map_err(lib)?.to_vec();
        let b = EquatorialCoord::new(ra2, dec2).map_err(lib)?.to_vec();
        *out(arcmin_out, "arcmin_out")? = arc_angle(&a, &b);
        Ok(())
    })
}

/// Covers a cap of radius `r` arcmin with id ranges at `depth`.
///
/// # Safety
/// `set_out` must be writable. The handle is freed with [`skycat_ranges_free`].
#[no_mangle]
pub unsafe extern "C" fn skycat_cover_cap(
    ra: f64,
    dec: f64,
    r: f64,
    depth: u32,
    budget: usize,
    set_out: *mut *mut SkycatRangeSet,
) -> SkycatStatus {
    guard(|| {
        let slot = out(set_out, "set_out")?;
        let cap = Cap::from_eq(ra, dec, r).map_err(lib)?;
        let set = cover(&cap.into(), depth, budget).map_err(lib)?;
        *slot = Box::into_raw(Box::new(SkycatRangeSet(set)));
        Ok(())
    })
}

/// Number of ranges; 0 for NULL.
///
/// # Safety
/// `set` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn skycat_ranges_len(set: *const SkycatRangeSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.ranges().len())
}

/// Inclusive bounds of range `i`.
///
/// # Safety
/// `set` must be a live handle; `lo` and `hi` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skycat_ranges_get(
    set: *const SkycatRangeSet,
    i: usize,
    lo: *mut u64,
    hi: *mut u64,
) -> SkycatStatus {
    guard(|| {
        let s = set.as_ref().ok_or_else(|| null("set"))?;
        let &(a, b) =
            s.0.ranges()
                .get(i)
                .ok_or_else(|| (SkycatStatus::OutOfRange, format!("range {i} of {}", s.0.ranges().len())))?;
        *out(lo, "lo")? = a;
        *out(hi, "hi")? = b;
        Ok(())
    })
}

/// Whether an index-depth id lies in the set; false for NULL.
///
/// # Safety
/// `set` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn skycat_ranges_contains(set: *const SkycatRangeSet, id: u64) -> bool {
    set.as_ref().is_some_and(|s| s.0.contains(id))
}

/// # Safety
/// `set` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn skycat_ranges_free(set: *mut SkycatRangeSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Creates an empty in-memory catalog.
///
/// # Safety
/// `cat_out` must be writable. Free with [`skycat_catalog_free`].
#[no_mangle]
pub unsafe extern "C" fn skycat_catalog_new(index_depth: u32, cat_out: *mut *mut SkycatCatalog) -> SkycatStatus {
    guard(|| {
        let slot = out(cat_out, "cat_out")?;
        let catalog = Catalog::new(index_depth).map_err(lib)?;
        *slot = Box::into_raw(Box::new(SkycatCatalog {
            catalog,
            journal: Journal::in_memory(),
        }));
        Ok(())
    })
}

/// Opens a catalog file.
///
/// # Safety
/// `path` must be NUL-terminated; `cat_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skycat_catalog_open(path: *const c_char, cat_out: *mut *mut SkycatCatalog) -> SkycatStatus {
    guard(|| {
        let slot = out(cat_out, "cat_out")?;
        let catalog = Catalog::open(path_arg(path)?).map_err(lib)?;
        *slot = Box::into_raw(Box::new(SkycatCatalog {
            catalog,
            journal: Journal::in_memory(),
        }));
        Ok(())
    })
}

/// # Safety
/// `cat` must be a live handle; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn skycat_catalog_save(cat: *const SkycatCatalog, path: *const c_char) -> SkycatStatus {
    guard(|| {
        let c = cat.as_ref().ok_or_else(|| null("cat"))?;
        c.catalog.save(path_arg(path)?).map_err(lib)
    })
}

/// # Safety
/// `cat` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn skycat_catalog_free(cat: *mut SkycatCatalog) {
    if !cat.is_null() {
        drop(Box::from_raw(cat));
    }
}

/// 64-bit content digest.
///
/// # Safety
/// `cat` must be a live handle; `digest_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skycat_catalog_digest(cat: *const SkycatCatalog, digest_out: *mut u64) -> SkycatStatus {
    guard(|| {
        let c = cat.as_ref().ok_or_else(|| null("cat"))?;
        *out(digest_out, "digest_out")? = c.catalog.digest();
        Ok(())
    })
}

/// # Safety
/// `cat` must be a live handle; `rows_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skycat_catalog_row_count(
    cat: *const SkycatCatalog,
    table: SkycatTable,
    rows_out: *mut u64,
) -> SkycatStatus {
    guard(|| {
        let c = cat.as_ref().ok_or_else(|| null("cat"))?;
        *out(rows_out, "rows_out")? = c.catalog.table(table.into()).len() as u64;
        Ok(())
    })
}

/// Loads a CSV file into `table`. A failed load (unreadable file or header
/// mismatch) still returns `Ok` with `status = 1` in the result.
///
/// # Safety
/// `cat` must be a live handle; `path` NUL-terminated; `result_out` writable.
#[no_mangle]
pub unsafe extern "C" fn skycat_catalog_load_csv(
    cat: *mut SkycatCatalog,
    table: SkycatTable,
    path: *const c_char,
    result_out: *mut SkycatLoadResult,
) -> SkycatStatus {
    guard(|| {
        let c = cat.as_mut().ok_or_else(|| null("cat"))?;
        let slot = out(result_out, "result_out")?;
        let path = path_arg(path)?;
        let r = loader::load_csv(&mut c.catalog, &mut c.journal, table.into(), path).map_err(lib)?;
        *slot = SkycatLoadResult {
            event_id: r.event.event_id,
            source_rows: r.event.source_rows,
            inserted_rows: r.event.inserted_rows,
            rejected_rows: r.trace.len() as u64,
            status: u32::from(r.event.status != EventStatus::Ok),
        };
        Ok(())
    })
}

/// Undoes a load made through this handle.
///
/// # Safety
/// `cat` must be a live handle; `removed_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skycat_catalog_undo(
    cat: *mut SkycatCatalog,
    event_id: u64,
    removed_out: *mut u64,
) -> SkycatStatus {
    guard(|| {
        let c = cat.as_mut().ok_or_else(|| null("cat"))?;
        let slot = out(removed_out, "removed_out")?;
        *slot = loader::undo(&mut c.catalog, &mut c.journal, event_id).map_err(lib)?;
        Ok(())
    })
}

/// Number of integrity violations found by a full validation pass.
///
/// # Safety
/// `cat` must be a live handle; `count_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skycat_catalog_validate(cat: *const SkycatCatalog, count_out: *mut u64) -> SkycatStatus {
    guard(|| {
        let c = cat.as_ref().ok_or_else(|| null("cat"))?;
        *out(count_out, "count_out")? = loader::validate(&c.catalog).len() as u64;
        Ok(())
    })
}

/// Rebuilds the neighbors table at `radius` arcmin.
///
/// # Safety
/// `cat` must be a live handle; `pairs_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skycat_build_neighbors(
    cat: *mut SkycatCatalog,
    radius: f64,
    pairs_out: *mut u64,
) -> SkycatStatus {
    guard(|| {
        let c = cat.as_mut().ok_or_else(|| null("cat"))?;
        let slot = out(pairs_out, "pairs_out")?;
        *slot = queries::build_neighbors(&mut c.catalog, radius).map_err(lib)? as u64;
        Ok(())
    })
}

/// Objects within `r` arcmin of (ra, dec), nearest first.
///
/// # Safety
/// `cat` must be a live handle; `hits_out` must be writable. Free the
/// result with [`skycat_hits_free`].
#[no_mangle]
pub unsafe extern "C" fn skycat_nearby(
    cat: *const SkycatCatalog,
    ra: f64,
    dec: f64,
    r: f64,
    hits_out: *mut *mut SkycatHits,
) -> SkycatStatus {
    guard(|| {
        let c = cat.as_ref().ok_or_else(|| null("cat"))?;
        let slot = out(hits_out, "hits_out")?;
        let hits = queries::nearby_eq(&c.catalog, ra, dec, r).map_err(lib)?;
        *slot = Box::into_raw(Box::new(SkycatHits(hits)));
        Ok(())
    })
}

/// Galaxies from primary detections without saturated pixels within `r`.
///
/// # Safety
/// As for [`skycat_nearby`].
#[no_mangle]
pub unsafe extern "C" fn skycat_q1(
    cat: *const SkycatCatalog,
    ra: f64,
    dec: f64,
    r: f64,
    hits_out: *mut *mut SkycatHits,
) -> SkycatStatus {
    guard(|| {
        let c = cat.as_ref().ok_or_else(|| null("cat"))?;
        let slot = out(hits_out, "hits_out")?;
        let hits = queries::q1_unsaturated_galaxies(&c.catalog, ra, dec, r).map_err(lib)?;
        *slot = Box::into_raw(Box::new(SkycatHits(hits)));
        Ok(())
    })
}

/// # Safety
/// `hits` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn skycat_hits_len(hits: *const SkycatHits) -> usize {
    hits.as_ref().map_or(0, |h| h.0.len())
}

/// # Safety
/// `hits` must be a live handle; `hit_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skycat_hits_get(hits: *const SkycatHits, i: usize, hit_out: *mut SkycatHit) -> SkycatStatus {
    guard(|| {
        let h = hits.as_ref().ok_or_else(|| null("hits"))?;
        let hit =
            h.0.get(i)
                .ok_or_else(|| (SkycatStatus::OutOfRange, format!("hit {i} of {}", h.0.len())))?;
        *out(hit_out, "hit_out")? = SkycatHit {
            obj_id: hit.obj_id,
            distance: hit.distance,
        };
        Ok(())
    })
}

/// # Safety
/// `hits` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn skycat_hits_free(hits: *mut SkycatHits) {
    if !hits.is_null() {
        drop(Box::from_raw(hits));
    }
}

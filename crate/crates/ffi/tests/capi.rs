use std::ffi::{CStr, CString};
use std::ptr;

use skycat::synth::{self, CSV_FILES};
use skycat_ffi::*;

fn last_error() -> String {
    let p = skycat_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn cstr(p: &std::path::Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

#[test]
fn lookup_and_names_round_trip() {
    let mut id = 0u64;
    assert_eq!(unsafe { skycat_lookup_id(185.0, 2.5, 6, &mut id) }, SkycatStatus::Ok);
    let mut buf = [0 as std::ffi::c_char; 32];
    assert_eq!(
        unsafe { skycat_id_to_name(id, buf.as_mut_ptr(), buf.len()) },
        SkycatStatus::Ok
    );
    let name = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_owned();
    assert_eq!(name.to_bytes().len(), 8);
    let mut back = 0u64;
    assert_eq!(unsafe { skycat_name_to_id(name.as_ptr(), &mut back) }, SkycatStatus::Ok);
    assert_eq!(back, id);
}

#[test]
fn errors_are_reported() {
    let mut id = 0u64;
    assert_eq!(
        unsafe { skycat_lookup_id(10.0, 91.0, 6, &mut id) },
        SkycatStatus::Domain
    );
    assert!(last_error().contains("91"));
    assert_eq!(
        unsafe { skycat_lookup_id(10.0, 0.0, 21, &mut id) },
        SkycatStatus::DepthLimit
    );
    assert_eq!(
        unsafe { skycat_lookup_id(10.0, 0.0, 6, ptr::null_mut()) },
        SkycatStatus::NullPointer
    );
    assert_eq!(
        unsafe { skycat_id_to_name(3, [0; 8].as_mut_ptr(), 8) },
        SkycatStatus::Encoding
    );

    let mut small = [0 as std::ffi::c_char; 4];
    assert_eq!(
        unsafe { skycat_id_to_name(12 * 16, small.as_mut_ptr(), 4) },
        SkycatStatus::BufferTooSmall
    );

    let bad = CString::new("Q12").unwrap();
    assert_eq!(
        unsafe { skycat_name_to_id(bad.as_ptr(), &mut id) },
        SkycatStatus::Encoding
    );
}

#[test]
fn cover_handle() {
    let mut set = ptr::null_mut();
    assert_eq!(
        unsafe { skycat_cover_cap(185.0, 0.0, 10.0, 12, 1000, &mut set) },
        SkycatStatus::Ok
    );
    let n = unsafe { skycat_ranges_len(set) };
    assert!(n > 0);
    let mut inside = 0u64;
    unsafe { skycat_lookup_id(185.0, 0.0, 12, &mut inside) };
    assert!(unsafe { skycat_ranges_contains(set, inside) });
    let (mut lo, mut hi) = (0, 0);
    assert_eq!(unsafe { skycat_ranges_get(set, 0, &mut lo, &mut hi) }, SkycatStatus::Ok);
    assert!(lo <= hi);
    assert_eq!(
        unsafe { skycat_ranges_get(set, n, &mut lo, &mut hi) },
        SkycatStatus::OutOfRange
    );
    unsafe { skycat_ranges_free(set) };

    assert_eq!(
        unsafe { skycat_cover_cap(185.0, 0.0, 10.0, 12, 4, &mut set) },
        SkycatStatus::Config
    );
    assert_eq!(unsafe { skycat_ranges_len(ptr::null()) }, 0);
    unsafe { skycat_ranges_free(ptr::null_mut()) };
}

#[test]
fn catalog_lifecycle() {
    let dir = tempfile::tempdir().unwrap();
    let sky = synth::generate(2000, 7);
    sky.write_csv(dir.path()).unwrap();

    let mut cat = ptr::null_mut();
    assert_eq!(unsafe { skycat_catalog_new(20, &mut cat) }, SkycatStatus::Ok);
    let tables = [
        SkycatTable::Field,
        SkycatTable::Plate,
        SkycatTable::PhotoObj,
        SkycatTable::SpecObj,
        SkycatTable::SpecLine,
    ];
    let mut results = Vec::new();
    for (table, (_, file)) in tables.iter().zip(CSV_FILES) {
        let path = cstr(&dir.path().join(file));
        let mut r = SkycatLoadResult::default();
        assert_eq!(
            unsafe { skycat_catalog_load_csv(cat, *table, path.as_ptr(), &mut r) },
            SkycatStatus::Ok
        );
        assert_eq!(r.status, 0);
        results.push(r);
    }
    let mut rows = 0;
    unsafe { skycat_catalog_row_count(cat, SkycatTable::PhotoObj, &mut rows) };
    assert_eq!(rows, 2000);
    let mut violations = 1;
    unsafe { skycat_catalog_validate(cat, &mut violations) };
    assert_eq!(violations, 0);

    // Photo rows are referenced by spectra, so undoing the photo load is refused.
    let mut removed = 0;
    assert_eq!(
        unsafe { skycat_catalog_undo(cat, results[2].event_id, &mut removed) },
        SkycatStatus::UndoConflict
    );
    assert_eq!(
        unsafe { skycat_catalog_undo(cat, results[4].event_id, &mut removed) },
        SkycatStatus::Ok
    );
    assert_eq!(removed, results[4].inserted_rows);

    let mut hits = ptr::null_mut();
    let p = &sky.photo[0];
    assert_eq!(
        unsafe { skycat_nearby(cat, p.ra, p.dec, 1.0, &mut hits) },
        SkycatStatus::Ok
    );
    assert!(unsafe { skycat_hits_len(hits) } >= 1);
    let mut h = SkycatHit::default();
    assert_eq!(unsafe { skycat_hits_get(hits, 0, &mut h) }, SkycatStatus::Ok);
    assert!(h.distance < 1e-6, "{h:?}");
    unsafe { skycat_hits_free(hits) };

    let mut pairs = 0;
    assert_eq!(
        unsafe { skycat_build_neighbors(cat, 0.5, &mut pairs) },
        SkycatStatus::Ok
    );
    unsafe { skycat_catalog_row_count(cat, SkycatTable::Neighbors, &mut rows) };
    assert_eq!(rows, pairs);

    let file = cstr(&dir.path().join("c.cat"));
    assert_eq!(unsafe { skycat_catalog_save(cat, file.as_ptr()) }, SkycatStatus::Ok);
    let mut reopened = ptr::null_mut();
    assert_eq!(
        unsafe { skycat_catalog_open(file.as_ptr(), &mut reopened) },
        SkycatStatus::Ok
    );
    let (mut a, mut b) = (0, 1);
    unsafe {
        skycat_catalog_digest(cat, &mut a);
        skycat_catalog_digest(reopened, &mut b);
    }
    assert_eq!(a, b);
    unsafe {
        skycat_catalog_free(cat);
        skycat_catalog_free(reopened);
    }
}

#[test]
fn failed_load_and_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut cat = ptr::null_mut();
    unsafe { skycat_catalog_new(20, &mut cat) };
    let missing = cstr(&dir.path().join("nope.csv"));
    let mut r = SkycatLoadResult::default();
    assert_eq!(
        unsafe { skycat_catalog_load_csv(cat, SkycatTable::Field, missing.as_ptr(), &mut r) },
        SkycatStatus::Ok
    );
    assert_eq!((r.status, r.inserted_rows), (1, 0));

    let junk = dir.path().join("junk.cat");
    std::fs::write(&junk, b"not a catalog").unwrap();
    let mut other = ptr::null_mut();
    let status = unsafe { skycat_catalog_open(cstr(&junk).as_ptr(), &mut other) };
    assert_ne!(status, SkycatStatus::Ok);
    assert!(other.is_null());
    assert_eq!(
        unsafe { skycat_catalog_open(missing.as_ptr(), &mut other) },
        SkycatStatus::Io
    );
    unsafe { skycat_catalog_free(cat) };
}

#[test]
fn header_declares_the_api() {
    let header = include_str!("../include/skycat.h");
    for sym in [
        "skycat_last_error",
        "skycat_lookup_id",
        "skycat_cover_cap",
        "skycat_catalog_open",
        "skycat_nearby",
        "skycat_hits_free",
        "SKYCAT_STATUS_UNDO_CONFLICT",
        "typedef struct SkycatCatalog SkycatCatalog;",
    ] {
        assert!(header.contains(sym), "{sym} missing from header");
    }
}

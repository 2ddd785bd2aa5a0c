//! The catalog store: photo and spectro tables, the neighbors table, the
//! flag dictionary and the htmID index over photo objects.
//!
//! Photo rows are kept sorted by `(htmID, objID)`, so a cover's id ranges
//! translate to contiguous row slices found by binary search.

mod flags;
mod persist;
mod schema;
mod tables;

use std::ops::Range;
use std::sync::{Arc, RwLock};

pub use flags::FlagDictionary;
pub use persist::{FORMAT_VERSION, MAGIC};
pub use schema::{csv_header, write_rows, Constraint, CsvRecord, FieldReader, RowError};
pub use tables::{
    Band, BandValues, ColumnMut, ColumnRef, ColumnStore, FieldRow, FieldTable, NeighborPair, NeighborTable, ObjType,
    PhotoObj, PhotoTable, PlateRow, PlateTable, SpecLineRow, SpecLineTable, SpecObjRow, SpecObjTable, TableName, BANDS,
};

use crate::error::{Error, Result};
use crate::htm::{lookup_id, MAX_DEPTH};
use crate::region::HtmRangeSet;
use crate::sphere::EquatorialCoord;

pub const DEFAULT_INDEX_DEPTH: u32 = 20;

/// Logical subsets of the photo table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum View {
    /// Primary detections from runs marked OK.
    PhotoPrimary,
    Star,
    Galaxy,
    All,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Catalog {
    index_depth: u32,
    flags: FlagDictionary,
    clock: u64,
    pub(crate) photo: PhotoTable,
    pub(crate) fields: FieldTable,
    pub(crate) plates: PlateTable,
    pub(crate) spec_objs: SpecObjTable,
    pub(crate) spec_lines: SpecLineTable,
    pub(crate) neighbors: NeighborTable,
}

impl Default for Catalog {
    fn default() -> Self {
        Self::new(DEFAULT_INDEX_DEPTH).expect("default depth is valid")
    }
}

impl Catalog {
    pub fn new(index_depth: u32) -> Result<Self> {
        Self::with_flags(index_depth, FlagDictionary::default())
    }

    pub fn with_flags(index_depth: u32, flags: FlagDictionary) -> Result<Self> {
        if index_depth > MAX_DEPTH {
            return Err(Error::DepthLimit {
                depth: index_depth,
                max: MAX_DEPTH,
            });
        }
        Ok(Self {
            index_depth,
            flags,
            clock: 0,
            photo: PhotoTable::default(),
            fields: FieldTable::default(),
            plates: PlateTable::default(),
            spec_objs: SpecObjTable::default(),
            spec_lines: SpecLineTable::default(),
            neighbors: NeighborTable::default(),
        })
    }

    pub fn index_depth(&self) -> u32 {
        self.index_depth
    }

    pub fn flags(&self) -> &FlagDictionary {
        &self.flags
    }

    pub fn flags_mut(&mut self) -> &mut FlagDictionary {
        &mut self.flags
    }

    pub fn flag_mask(&self, name: &str) -> Result<u64> {
        self.flags.mask(name)
    }

    pub fn photo(&self) -> &PhotoTable {
        &self.photo
    }

    pub fn fields(&self) -> &FieldTable {
        &self.fields
    }

    pub fn plates(&self) -> &PlateTable {
        &self.plates
    }

    pub fn spec_objs(&self) -> &SpecObjTable {
        &self.spec_objs
    }

    pub fn spec_lines(&self) -> &SpecLineTable {
        &self.spec_lines
    }

    pub fn neighbors(&self) -> &NeighborTable {
        &self.neighbors
    }

    pub fn table(&self, name: TableName) -> &dyn ColumnStore {
        match name {
            TableName::Field => &self.fields,
            TableName::Plate => &self.plates,
            TableName::PhotoObj => &self.photo,
            TableName::SpecObj => &self.spec_objs,
            TableName::SpecLine => &self.spec_lines,
            TableName::Neighbors => &self.neighbors,
        }
    }

    pub(crate) fn table_mut(&mut self, name: TableName) -> &mut dyn ColumnStore {
        match name {
            TableName::Field => &mut self.fields,
            TableName::Plate => &mut self.plates,
            TableName::PhotoObj => &mut self.photo,
            TableName::SpecObj => &mut self.spec_objs,
            TableName::SpecLine => &mut self.spec_lines,
            TableName::Neighbors => &mut self.neighbors,
        }
    }

    /// Last issued load stamp.
    pub fn clock(&self) -> u64 {
        self.clock
    }

    /// Issues the next load stamp.
    pub(crate) fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    /// Fills `cx, cy, cz` and `htm_id` from `ra, dec` at this catalog's index depth.
    pub fn derive_position(&self, o: &mut PhotoObj) -> Result<()> {
        let v = EquatorialCoord::new(o.ra, o.dec)?.to_vec();
        o.cx = v.x;
        o.cy = v.y;
        o.cz = v.z;
        o.htm_id = lookup_id(&v, self.index_depth)?.raw();
        Ok(())
    }

    /// Appends already-validated photo rows and restores htmID order.
    pub(crate) fn append_photo(&mut self, rows: &[PhotoObj]) {
        for r in rows {
            self.photo.push(r);
        }
        self.photo.sort_by_htm();
    }

    pub(crate) fn replace_neighbors(&mut self, table: NeighborTable) {
        self.neighbors = table;
    }

    pub fn view_filter(&self, view: View, o: &PhotoObj) -> bool {
        self.view_matches(view, o.flags, o.obj_type)
    }

    pub(crate) fn view_matches(&self, view: View, flags: u64, obj_type: ObjType) -> bool {
        let primary = || {
            // the shipped dictionary always defines both names
            let m = self.flags.mask("primary").unwrap_or(0) | self.flags.mask("ok_run").unwrap_or(0);
            m != 0 && flags & m == m
        };
        match view {
            View::All => true,
            View::PhotoPrimary => primary(),
            View::Star => obj_type == ObjType::Star && primary(),
            View::Galaxy => obj_type == ObjType::Galaxy && primary(),
        }
    }

    /// Row slices of the photo table whose htmID falls in `ranges`.
    pub fn range_rows(&self, ranges: &HtmRangeSet) -> Result<Vec<Range<usize>>> {
        if ranges.index_depth() != self.index_depth {
            return Err(Error::DepthMismatch {
                expected: self.index_depth,
                found: ranges.index_depth(),
            });
        }
        let htm = &self.photo.htm_id;
        let mut out = Vec::new();
        let mut from = 0;
        for &(lo, hi) in ranges.ranges() {
            let start = from + htm[from..].partition_point(|&h| h < lo);
            let end = start + htm[start..].partition_point(|&h| h <= hi);
            if start < end {
                out.push(start..end);
            }
            from = end;
        }
        Ok(out)
    }

    /// Photo objects whose htmID lies in one of the ranges, in htmID order.
    pub fn range_query<'a>(&'a self, ranges: &HtmRangeSet) -> Result<impl Iterator<Item = PhotoObj> + 'a> {
        let slices = self.range_rows(ranges)?;
        Ok(slices.into_iter().flatten().map(move |i| self.photo.row(i)))
    }

    /// Row index of an object id, by scan.
    pub fn find_photo(&self, obj_id: u64) -> Option<usize> {
        self.photo.obj_id.iter().position(|&id| id == obj_id)
    }

    pub fn row_counts(&self) -> Vec<(TableName, usize)> {
        TableName::ALL.iter().map(|&t| (t, self.table(t).len())).collect()
    }
}

/// A catalog shared between readers and a single writer. Readers hold an
/// immutable snapshot; a write builds the next version and swaps it in.
#[derive(Debug, Default)]
pub struct SharedCatalog {
    current: RwLock<Arc<Catalog>>,
}

impl SharedCatalog {
    pub fn new(catalog: Catalog) -> Self {
        Self {
            current: RwLock::new(Arc::new(catalog)),
        }
    }

    pub fn snapshot(&self) -> Arc<Catalog> {
        self.current.read().expect("catalog lock poisoned").clone()
    }

    /// Runs `f` on a private copy and publishes it only if `f` succeeds.
    pub fn write<T>(&self, f: impl FnOnce(&mut Catalog) -> Result<T>) -> Result<T> {
        let mut guard = self.current.write().expect("catalog lock poisoned");
        let mut next = Catalog::clone(&guard);
        let out = f(&mut next)?;
        *guard = Arc::new(next);
        Ok(out)
    }
}

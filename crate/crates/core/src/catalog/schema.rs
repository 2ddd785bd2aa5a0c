//! CSV import/export schema, one file per table.
//!
//! Files carry a header row with the exact column names below. Derived
//! columns (`cx, cy, cz, htmID`) and `loadStamp` are computed on insert and
//! never appear in CSV.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::tables::{FIBER_MAG, ISO_A, ISO_B, MODEL_MAG, MODEL_MAG_ERR, Q, U};
use super::{
    BandValues, Catalog, ColumnStore, FieldRow, NeighborPair, ObjType, PhotoObj, PlateRow, SpecLineRow, SpecObjRow,
    TableName,
};
use crate::error::{Error, Result};

/// Which rule a rejected row or a catalog violation broke.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    NotNull,
    Type,
    Domain,
    PrimaryKey,
    ForeignKey,
    Derived,
    SortOrder,
}

impl Constraint {
    pub fn as_str(self) -> &'static str {
        match self {
            Constraint::NotNull => "not_null",
            Constraint::Type => "type",
            Constraint::Domain => "domain",
            Constraint::PrimaryKey => "primary_key",
            Constraint::ForeignKey => "foreign_key",
            Constraint::Derived => "derived",
            Constraint::SortOrder => "sort_order",
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowError {
    pub constraint: Constraint,
    pub detail: String,
}

impl RowError {
    pub fn new(constraint: Constraint, detail: impl Into<String>) -> Self {
        Self {
            constraint,
            detail: detail.into(),
        }
    }
}

/// Named access to one CSV record with null and type checks.
pub struct FieldReader<'a> {
    columns: &'a HashMap<String, usize>,
    record: &'a csv::StringRecord,
}

impl<'a> FieldReader<'a> {
    pub fn new(columns: &'a HashMap<String, usize>, record: &'a csv::StringRecord) -> Self {
        Self { columns, record }
    }

    pub fn str(&self, name: &str) -> Result<&'a str, RowError> {
        let raw = self
            .columns
            .get(name)
            .and_then(|&i| self.record.get(i))
            .map(str::trim)
            .unwrap_or("");
        if raw.is_empty() || raw.eq_ignore_ascii_case("null") {
            return Err(RowError::new(Constraint::NotNull, format!("{name} is null")));
        }
        Ok(raw)
    }

    fn parse<T: FromStr>(&self, name: &str) -> Result<T, RowError> {
        let s = self.str(name)?;
        s.parse()
            .map_err(|_| RowError::new(Constraint::Type, format!("{name}: cannot parse {s:?}")))
    }

    pub fn u64(&self, name: &str) -> Result<u64, RowError> {
        self.parse(name)
    }

    pub fn i32(&self, name: &str) -> Result<i32, RowError> {
        self.parse(name)
    }

    pub fn f64(&self, name: &str) -> Result<f64, RowError> {
        let v: f64 = self.parse(name)?;
        if v.is_nan() {
            return Err(RowError::new(Constraint::NotNull, format!("{name} is NaN")));
        }
        Ok(v)
    }

    pub fn f32(&self, name: &str) -> Result<f32, RowError> {
        let v: f32 = self.parse(name)?;
        if v.is_nan() {
            return Err(RowError::new(Constraint::NotNull, format!("{name} is NaN")));
        }
        Ok(v)
    }

    pub fn obj_type(&self, name: &str) -> Result<ObjType, RowError> {
        let s = self.str(name)?;
        s.parse()
            .map_err(|_| RowError::new(Constraint::Type, format!("{name}: unknown type {s:?}")))
    }
}

/// A row type with a CSV form.
pub trait CsvRecord: Sized {
    const TABLE: TableName;
    fn header() -> Vec<&'static str>;
    fn to_record(&self) -> Vec<String>;
    fn from_record(r: &FieldReader<'_>) -> Result<Self, RowError>;
}

impl CsvRecord for PhotoObj {
    const TABLE: TableName = TableName::PhotoObj;

    fn header() -> Vec<&'static str> {
        let mut h = vec![
            "objID", "fieldID", "run", "camcol", "field", "ra", "dec", "type", "flags", "parentID", "rowv", "colv",
        ];
        for b in 0..5 {
            h.extend([
                MODEL_MAG[b],
                MODEL_MAG_ERR[b],
                FIBER_MAG[b],
                Q[b],
                U[b],
                ISO_A[b],
                ISO_B[b],
            ]);
        }
        h
    }

    fn to_record(&self) -> Vec<String> {
        let mut r = vec![
            self.obj_id.to_string(),
            self.field_id.to_string(),
            self.run.to_string(),
            self.camcol.to_string(),
            self.field.to_string(),
            self.ra.to_string(),
            self.dec.to_string(),
            self.obj_type.to_string(),
            self.flags.to_string(),
            self.parent_id.to_string(),
            self.rowv.to_string(),
            self.colv.to_string(),
        ];
        for b in &self.bands {
            r.extend([
                b.model_mag.to_string(),
                b.model_mag_err.to_string(),
                b.fiber_mag.to_string(),
                b.q.to_string(),
                b.u.to_string(),
                b.iso_a.to_string(),
                b.iso_b.to_string(),
            ]);
        }
        r
    }

    fn from_record(r: &FieldReader<'_>) -> Result<Self, RowError> {
        let mut bands = [BandValues::default(); 5];
        for (b, v) in bands.iter_mut().enumerate() {
            *v = BandValues {
                model_mag: r.f32(MODEL_MAG[b])?,
                model_mag_err: r.f32(MODEL_MAG_ERR[b])?,
                fiber_mag: r.f32(FIBER_MAG[b])?,
                q: r.f32(Q[b])?,
                u: r.f32(U[b])?,
                iso_a: r.f32(ISO_A[b])?,
                iso_b: r.f32(ISO_B[b])?,
            };
        }
        Ok(PhotoObj {
            obj_id: r.u64("objID")?,
            field_id: r.u64("fieldID")?,
            run: r.i32("run")?,
            camcol: r.i32("camcol")?,
            field: r.i32("field")?,
            ra: r.f64("ra")?,
            dec: r.f64("dec")?,
            obj_type: r.obj_type("type")?,
            flags: r.u64("flags")?,
            parent_id: r.u64("parentID")?,
            rowv: r.f32("rowv")?,
            colv: r.f32("colv")?,
            bands,
            ..Default::default()
        })
    }
}

impl CsvRecord for FieldRow {
    const TABLE: TableName = TableName::Field;

    fn header() -> Vec<&'static str> {
        vec!["fieldID", "run", "camcol", "field"]
    }

    fn to_record(&self) -> Vec<String> {
        vec![
            self.field_id.to_string(),
            self.run.to_string(),
            self.camcol.to_string(),
            self.field.to_string(),
        ]
    }

    fn from_record(r: &FieldReader<'_>) -> Result<Self, RowError> {
        Ok(FieldRow {
            field_id: r.u64("fieldID")?,
            run: r.i32("run")?,
            camcol: r.i32("camcol")?,
            field: r.i32("field")?,
            load_stamp: 0,
        })
    }
}

impl CsvRecord for PlateRow {
    const TABLE: TableName = TableName::Plate;

    fn header() -> Vec<&'static str> {
        vec!["plateID"]
    }

    fn to_record(&self) -> Vec<String> {
        vec![self.plate_id.to_string()]
    }

    fn from_record(r: &FieldReader<'_>) -> Result<Self, RowError> {
        Ok(PlateRow {
            plate_id: r.u64("plateID")?,
            load_stamp: 0,
        })
    }
}

impl CsvRecord for SpecObjRow {
    const TABLE: TableName = TableName::SpecObj;

    fn header() -> Vec<&'static str> {
        vec!["specObjID", "plateID", "bestObjID", "z"]
    }

    fn to_record(&self) -> Vec<String> {
        vec![
            self.spec_obj_id.to_string(),
            self.plate_id.to_string(),
            self.best_obj_id.to_string(),
            self.z.to_string(),
        ]
    }

    fn from_record(r: &FieldReader<'_>) -> Result<Self, RowError> {
        Ok(SpecObjRow {
            spec_obj_id: r.u64("specObjID")?,
            plate_id: r.u64("plateID")?,
            best_obj_id: r.u64("bestObjID")?,
            z: r.f64("z")?,
            load_stamp: 0,
        })
    }
}

impl CsvRecord for SpecLineRow {
    const TABLE: TableName = TableName::SpecLine;

    fn header() -> Vec<&'static str> {
        vec!["lineID", "specObjID", "wavelength", "ew"]
    }

    fn to_record(&self) -> Vec<String> {
        vec![
            self.line_id.to_string(),
            self.spec_obj_id.to_string(),
            self.wavelength.to_string(),
            self.ew.to_string(),
        ]
    }

    fn from_record(r: &FieldReader<'_>) -> Result<Self, RowError> {
        Ok(SpecLineRow {
            line_id: r.u64("lineID")?,
            spec_obj_id: r.u64("specObjID")?,
            wavelength: r.f64("wavelength")?,
            ew: r.f64("ew")?,
            load_stamp: 0,
        })
    }
}

impl CsvRecord for NeighborPair {
    const TABLE: TableName = TableName::Neighbors;

    fn header() -> Vec<&'static str> {
        vec!["objID", "neighborObjID", "distance"]
    }

    fn to_record(&self) -> Vec<String> {
        vec![
            self.obj_id.to_string(),
            self.neighbor_obj_id.to_string(),
            self.distance.to_string(),
        ]
    }

    fn from_record(r: &FieldReader<'_>) -> Result<Self, RowError> {
        Ok(NeighborPair {
            obj_id: r.u64("objID")?,
            neighbor_obj_id: r.u64("neighborObjID")?,
            distance: r.f64("distance")?,
            load_stamp: 0,
        })
    }
}

/// Import header for a table.
pub fn csv_header(table: TableName) -> Vec<&'static str> {
    match table {
        TableName::Field => FieldRow::header(),
        TableName::Plate => PlateRow::header(),
        TableName::PhotoObj => PhotoObj::header(),
        TableName::SpecObj => SpecObjRow::header(),
        TableName::SpecLine => SpecLineRow::header(),
        TableName::Neighbors => NeighborPair::header(),
    }
}

/// Writes rows with a header; an empty slice gives a header-only file.
pub fn write_rows<T: CsvRecord, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Format(format!("csv write: {e}"));
    w.write_record(T::header()).map_err(err)?;
    for r in rows {
        w.write_record(r.to_record()).map_err(err)?;
    }
    w.flush().map_err(|e| Error::Format(format!("csv write: {e}")))
}

impl Catalog {
    /// Exports one table in the loader's import format, in storage order.
    pub fn export_csv<W: Write>(&self, table: TableName, out: W) -> Result<()> {
        match table {
            TableName::Field => {
                let t = self.fields();
                write_rows(&(0..t.len()).map(|i| t.row(i)).collect::<Vec<_>>(), out)
            }
            TableName::Plate => {
                let t = self.plates();
                write_rows(&(0..t.len()).map(|i| t.row(i)).collect::<Vec<_>>(), out)
            }
            TableName::PhotoObj => write_rows(&self.photo().rows().collect::<Vec<_>>(), out),
            TableName::SpecObj => {
                let t = self.spec_objs();
                write_rows(&(0..t.len()).map(|i| t.row(i)).collect::<Vec<_>>(), out)
            }
            TableName::SpecLine => {
                let t = self.spec_lines();
                write_rows(&(0..t.len()).map(|i| t.row(i)).collect::<Vec<_>>(), out)
            }
            TableName::Neighbors => write_rows(&self.neighbors().rows().collect::<Vec<_>>(), out),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reader_for(header: &[&str], values: &[&str]) -> (HashMap<String, usize>, csv::StringRecord) {
        let idx = header.iter().enumerate().map(|(i, h)| (h.to_string(), i)).collect();
        (idx, csv::StringRecord::from(values.to_vec()))
    }

    #[test]
    fn photo_record_round_trip() {
        let o = PhotoObj {
            obj_id: 5,
            field_id: 2,
            run: 752,
            camcol: 1,
            field: 11,
            ra: 185.000_000_1,
            dec: -0.5,
            obj_type: ObjType::Galaxy,
            flags: 0x0a00,
            rowv: 0.1,
            colv: -3.25,
            bands: std::array::from_fn(|b| BandValues {
                model_mag: 17.1 + b as f32 * 0.3,
                iso_a: 2.5,
                iso_b: 1.1,
                ..Default::default()
            }),
            ..Default::default()
        };
        let header = PhotoObj::header();
        let rec = o.to_record();
        assert_eq!(header.len(), rec.len());
        let strs: Vec<&str> = rec.iter().map(String::as_str).collect();
        let (idx, sr) = reader_for(&header, &strs);
        let back = PhotoObj::from_record(&FieldReader::new(&idx, &sr)).unwrap();
        assert_eq!(back, o);
    }

    #[test]
    fn null_and_type_errors() {
        let (idx, sr) = reader_for(&["fieldID", "run", "camcol", "field"], &["1", "", "2", "3"]);
        let e = FieldRow::from_record(&FieldReader::new(&idx, &sr)).unwrap_err();
        assert_eq!(e.constraint, Constraint::NotNull);
        let (idx, sr) = reader_for(&["fieldID", "run", "camcol", "field"], &["x", "1", "2", "3"]);
        let e = FieldRow::from_record(&FieldReader::new(&idx, &sr)).unwrap_err();
        assert_eq!(e.constraint, Constraint::Type);
        let (idx, sr) = reader_for(&["plateID"], &["NULL"]);
        assert!(PlateRow::from_record(&FieldReader::new(&idx, &sr)).is_err());
    }

    #[test]
    fn header_only_export() {
        let mut out = Vec::new();
        Catalog::default().export_csv(TableName::SpecLine, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "lineID,specObjID,wavelength,ew\n");
    }
}

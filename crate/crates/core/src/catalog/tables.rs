//! Column-oriented table storage and the row types that go in and out of it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BANDS: [&str; 5] = ["u", "g", "r", "i", "z"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Band {
    U = 0,
    G = 1,
    R = 2,
    I = 3,
    Z = 4,
}

impl Band {
    pub const ALL: [Band; 5] = [Band::U, Band::G, Band::R, Band::I, Band::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum ObjType {
    #[default]
    Star = 0,
    Galaxy = 1,
    Trail = 2,
    Defect = 3,
}

impl ObjType {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjType::Star => "star",
            ObjType::Galaxy => "galaxy",
            ObjType::Trail => "trail",
            ObjType::Defect => "defect",
        }
    }

    pub fn from_code(code: u8) -> Option<ObjType> {
        match code {
            0 => Some(ObjType::Star),
            1 => Some(ObjType::Galaxy),
            2 => Some(ObjType::Trail),
            3 => Some(ObjType::Defect),
            _ => None,
        }
    }
}

impl fmt::Display for ObjType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "star" => Ok(ObjType::Star),
            "galaxy" => Ok(ObjType::Galaxy),
            "trail" => Ok(ObjType::Trail),
            "defect" => Ok(ObjType::Defect),
            _ => Err(Error::Domain(format!("unknown object type {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TableName {
    Field,
    Plate,
    PhotoObj,
    SpecObj,
    SpecLine,
    Neighbors,
}

impl TableName {
    /// Storage order; referenced tables come before their dependents.
    pub const ALL: [TableName; 6] = [
        TableName::Field,
        TableName::Plate,
        TableName::PhotoObj,
        TableName::SpecObj,
        TableName::SpecLine,
        TableName::Neighbors,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TableName::Field => "Field",
            TableName::Plate => "Plate",
            TableName::PhotoObj => "PhotoObj",
            TableName::SpecObj => "SpecObj",
            TableName::SpecLine => "SpecLine",
            TableName::Neighbors => "Neighbors",
        }
    }

    pub(crate) fn code(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for TableName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TableName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TableName::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownTable(s.to_string()))
    }
}

/// Borrowed view of one column.
pub enum ColumnRef<'a> {
    U64(&'a [u64]),
    I32(&'a [i32]),
    F64(&'a [f64]),
    F32(&'a [f32]),
    Type(&'a [ObjType]),
}

impl ColumnRef<'_> {
    pub fn width(&self) -> usize {
        match self {
            ColumnRef::U64(_) | ColumnRef::F64(_) => 8,
            ColumnRef::I32(_) | ColumnRef::F32(_) => 4,
            ColumnRef::Type(_) => 1,
        }
    }

    /// Little-endian fixed-width encoding.
    pub fn write_le(&self, out: &mut Vec<u8>) {
        match self {
            ColumnRef::U64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            ColumnRef::I32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            ColumnRef::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            ColumnRef::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            ColumnRef::Type(v) => out.extend(v.iter().map(|&t| t as u8)),
        }
    }

    /// Rows holding NaN; always empty for integer columns.
    pub fn nan_rows(&self) -> Vec<usize> {
        let pick = |it: &mut dyn Iterator<Item = bool>| it.enumerate().filter(|(_, n)| *n).map(|(i, _)| i).collect();
        match self {
            ColumnRef::F64(v) => pick(&mut v.iter().map(|x| x.is_nan())),
            ColumnRef::F32(v) => pick(&mut v.iter().map(|x| x.is_nan())),
            _ => Vec::new(),
        }
    }
}

/// Mutable handle on one column, for whole-table row operations.
pub enum ColumnMut<'a> {
    U64(&'a mut Vec<u64>),
    I32(&'a mut Vec<i32>),
    F64(&'a mut Vec<f64>),
    F32(&'a mut Vec<f32>),
    Type(&'a mut Vec<ObjType>),
}

fn retain_by<T: Copy>(v: &mut Vec<T>, keep: &[bool]) {
    let mut i = 0;
    v.retain(|_| {
        let k = keep[i];
        i += 1;
        k
    });
}

fn permute<T: Copy>(v: &mut Vec<T>, order: &[usize]) {
    let out: Vec<T> = order.iter().map(|&i| v[i]).collect();
    *v = out;
}

impl ColumnMut<'_> {
    pub fn retain(&mut self, keep: &[bool]) {
        match self {
            ColumnMut::U64(v) => retain_by(v, keep),
            ColumnMut::I32(v) => retain_by(v, keep),
            ColumnMut::F64(v) => retain_by(v, keep),
            ColumnMut::F32(v) => retain_by(v, keep),
            ColumnMut::Type(v) => retain_by(v, keep),
        }
    }

    pub fn permute(&mut self, order: &[usize]) {
        match self {
            ColumnMut::U64(v) => permute(v, order),
            ColumnMut::I32(v) => permute(v, order),
            ColumnMut::F64(v) => permute(v, order),
            ColumnMut::F32(v) => permute(v, order),
            ColumnMut::Type(v) => permute(v, order),
        }
    }

    pub fn width(&self) -> usize {
        match self {
            ColumnMut::U64(_) | ColumnMut::F64(_) => 8,
            ColumnMut::I32(_) | ColumnMut::F32(_) => 4,
            ColumnMut::Type(_) => 1,
        }
    }

    /// Replaces the contents from `rows` little-endian values.
    pub fn read_le(&mut self, bytes: &[u8], rows: usize) -> Result<()> {
        debug_assert_eq!(bytes.len(), rows * self.width());
        match self {
            ColumnMut::U64(v) => {
                **v = bytes
                    .chunks_exact(8)
                    .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
                    .collect()
            }
            ColumnMut::I32(v) => {
                **v = bytes
                    .chunks_exact(4)
                    .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
                    .collect()
            }
            ColumnMut::F64(v) => {
                **v = bytes
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect()
            }
            ColumnMut::F32(v) => {
                **v = bytes
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect()
            }
            ColumnMut::Type(v) => {
                **v = bytes
                    .iter()
                    .map(|&b| ObjType::from_code(b).ok_or_else(|| Error::Format(format!("bad object type code {b}"))))
                    .collect::<Result<_>>()?
            }
        }
        Ok(())
    }
}

/// Columnar storage shared by every table.
pub trait ColumnStore {
    fn name(&self) -> TableName;
    fn len(&self) -> usize;
    fn columns(&self) -> Vec<(&'static str, ColumnRef<'_>)>;
    fn columns_mut(&mut self) -> Vec<ColumnMut<'_>>;
    fn load_stamps(&self) -> &[u64];

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bytes per row across all columns.
    fn row_width(&self) -> usize {
        self.columns().iter().map(|(_, c)| c.width()).sum()
    }

    fn retain_rows(&mut self, keep: &[bool]) {
        for mut c in self.columns_mut() {
            c.retain(keep);
        }
    }

    fn permute_rows(&mut self, order: &[usize]) {
        for mut c in self.columns_mut() {
            c.permute(order);
        }
    }
}

/// Per-band photometry and shape.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BandValues {
    pub model_mag: f32,
    pub model_mag_err: f32,
    pub fiber_mag: f32,
    pub q: f32,
    pub u: f32,
    pub iso_a: f32,
    pub iso_b: f32,
}

/// One photometric detection.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhotoObj {
    pub obj_id: u64,
    pub field_id: u64,
    pub run: i32,
    pub camcol: i32,
    pub field: i32,
    pub ra: f64,
    pub dec: f64,
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
    pub htm_id: u64,
    pub obj_type: ObjType,
    pub flags: u64,
    pub parent_id: u64,
    pub rowv: f32,
    pub colv: f32,
    pub bands: [BandValues; 5],
    pub load_stamp: u64,
}

impl PhotoObj {
    pub fn band(&self, b: Band) -> &BandValues {
        &self.bands[b.index()]
    }
}

pub(crate) const MODEL_MAG: [&str; 5] = ["modelMag_u", "modelMag_g", "modelMag_r", "modelMag_i", "modelMag_z"];
pub(crate) const MODEL_MAG_ERR: [&str; 5] = [
    "modelMagErr_u",
    "modelMagErr_g",
    "modelMagErr_r",
    "modelMagErr_i",
    "modelMagErr_z",
];
pub(crate) const FIBER_MAG: [&str; 5] = ["fiberMag_u", "fiberMag_g", "fiberMag_r", "fiberMag_i", "fiberMag_z"];
pub(crate) const Q: [&str; 5] = ["q_u", "q_g", "q_r", "q_i", "q_z"];
pub(crate) const U: [&str; 5] = ["u_u", "u_g", "u_r", "u_i", "u_z"];
pub(crate) const ISO_A: [&str; 5] = ["isoA_u", "isoA_g", "isoA_r", "isoA_i", "isoA_z"];
pub(crate) const ISO_B: [&str; 5] = ["isoB_u", "isoB_g", "isoB_r", "isoB_i", "isoB_z"];

/// Struct-of-arrays photo table, kept sorted by `(htm_id, obj_id)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhotoTable {
    pub obj_id: Vec<u64>,
    pub field_id: Vec<u64>,
    pub run: Vec<i32>,
    pub camcol: Vec<i32>,
    pub field: Vec<i32>,
    pub ra: Vec<f64>,
    pub dec: Vec<f64>,
    pub cx: Vec<f64>,
    pub cy: Vec<f64>,
    pub cz: Vec<f64>,
    pub htm_id: Vec<u64>,
    pub obj_type: Vec<ObjType>,
    pub flags: Vec<u64>,
    pub parent_id: Vec<u64>,
    pub rowv: Vec<f32>,
    pub colv: Vec<f32>,
    pub model_mag: [Vec<f32>; 5],
    pub model_mag_err: [Vec<f32>; 5],
    pub fiber_mag: [Vec<f32>; 5],
    pub q: [Vec<f32>; 5],
    pub u: [Vec<f32>; 5],
    pub iso_a: [Vec<f32>; 5],
    pub iso_b: [Vec<f32>; 5],
    pub load_stamp: Vec<u64>,
}

impl PhotoTable {
    pub fn push(&mut self, o: &PhotoObj) {
        self.obj_id.push(o.obj_id);
        self.field_id.push(o.field_id);
        self.run.push(o.run);
        self.camcol.push(o.camcol);
        self.field.push(o.field);
        self.ra.push(o.ra);
        self.dec.push(o.dec);
        self.cx.push(o.cx);
        self.cy.push(o.cy);
        self.cz.push(o.cz);
        self.htm_id.push(o.htm_id);
        self.obj_type.push(o.obj_type);
        self.flags.push(o.flags);
        self.parent_id.push(o.parent_id);
        self.rowv.push(o.rowv);
        self.colv.push(o.colv);
        for (b, v) in o.bands.iter().enumerate() {
            self.model_mag[b].push(v.model_mag);
            self.model_mag_err[b].push(v.model_mag_err);
            self.fiber_mag[b].push(v.fiber_mag);
            self.q[b].push(v.q);
            self.u[b].push(v.u);
            self.iso_a[b].push(v.iso_a);
            self.iso_b[b].push(v.iso_b);
        }
        self.load_stamp.push(o.load_stamp);
    }

    pub fn row(&self, i: usize) -> PhotoObj {
        PhotoObj {
            obj_id: self.obj_id[i],
            field_id: self.field_id[i],
            run: self.run[i],
            camcol: self.camcol[i],
            field: self.field[i],
            ra: self.ra[i],
            dec: self.dec[i],
            cx: self.cx[i],
            cy: self.cy[i],
            cz: self.cz[i],
            htm_id: self.htm_id[i],
            obj_type: self.obj_type[i],
            flags: self.flags[i],
            parent_id: self.parent_id[i],
            rowv: self.rowv[i],
            colv: self.colv[i],
            bands: std::array::from_fn(|b| BandValues {
                model_mag: self.model_mag[b][i],
                model_mag_err: self.model_mag_err[b][i],
                fiber_mag: self.fiber_mag[b][i],
                q: self.q[b][i],
                u: self.u[b][i],
                iso_a: self.iso_a[b][i],
                iso_b: self.iso_b[b][i],
            }),
            load_stamp: self.load_stamp[i],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = PhotoObj> + '_ {
        (0..self.len()).map(|i| self.row(i))
    }

    /// Restores `(htm_id, obj_id)` order after an append.
    pub(crate) fn sort_by_htm(&mut self) {
        let sorted = self
            .htm_id
            .windows(2)
            .zip(self.obj_id.windows(2))
            .all(|(h, o)| (h[0], o[0]) <= (h[1], o[1]));
        if sorted {
            return;
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_unstable_by_key(|&i| (self.htm_id[i], self.obj_id[i]));
        self.permute_rows(&order);
    }
}

impl ColumnStore for PhotoTable {
    fn name(&self) -> TableName {
        TableName::PhotoObj
    }

    fn len(&self) -> usize {
        self.obj_id.len()
    }

    fn columns(&self) -> Vec<(&'static str, ColumnRef<'_>)> {
        let mut cols = vec![
            ("objID", ColumnRef::U64(&self.obj_id)),
            ("fieldID", ColumnRef::U64(&self.field_id)),
            ("run", ColumnRef::I32(&self.run)),
            ("camcol", ColumnRef::I32(&self.camcol)),
            ("field", ColumnRef::I32(&self.field)),
            ("ra", ColumnRef::F64(&self.ra)),
            ("dec", ColumnRef::F64(&self.dec)),
            ("cx", ColumnRef::F64(&self.cx)),
            ("cy", ColumnRef::F64(&self.cy)),
            ("cz", ColumnRef::F64(&self.cz)),
            ("htmID", ColumnRef::U64(&self.htm_id)),
            ("type", ColumnRef::Type(&self.obj_type)),
            ("flags", ColumnRef::U64(&self.flags)),
            ("parentID", ColumnRef::U64(&self.parent_id)),
            ("rowv", ColumnRef::F32(&self.rowv)),
            ("colv", ColumnRef::F32(&self.colv)),
        ];
        for b in 0..5 {
            cols.push((MODEL_MAG[b], ColumnRef::F32(&self.model_mag[b])));
            cols.push((MODEL_MAG_ERR[b], ColumnRef::F32(&self.model_mag_err[b])));
            cols.push((FIBER_MAG[b], ColumnRef::F32(&self.fiber_mag[b])));
            cols.push((Q[b], ColumnRef::F32(&self.q[b])));
            cols.push((U[b], ColumnRef::F32(&self.u[b])));
            cols.push((ISO_A[b], ColumnRef::F32(&self.iso_a[b])));
            cols.push((ISO_B[b], ColumnRef::F32(&self.iso_b[b])));
        }
        cols.push(("loadStamp", ColumnRef::U64(&self.load_stamp)));
        cols
    }

    fn columns_mut(&mut self) -> Vec<ColumnMut<'_>> {
        let mut cols = vec![
            ColumnMut::U64(&mut self.obj_id),
            ColumnMut::U64(&mut self.field_id),
            ColumnMut::I32(&mut self.run),
            ColumnMut::I32(&mut self.camcol),
            ColumnMut::I32(&mut self.field),
            ColumnMut::F64(&mut self.ra),
            ColumnMut::F64(&mut self.dec),
            ColumnMut::F64(&mut self.cx),
            ColumnMut::F64(&mut self.cy),
            ColumnMut::F64(&mut self.cz),
            ColumnMut::U64(&mut self.htm_id),
            ColumnMut::Type(&mut self.obj_type),
            ColumnMut::U64(&mut self.flags),
            ColumnMut::U64(&mut self.parent_id),
            ColumnMut::F32(&mut self.rowv),
            ColumnMut::F32(&mut self.colv),
        ];
        let Self {
            model_mag,
            model_mag_err,
            fiber_mag,
            q,
            u,
            iso_a,
            iso_b,
            ..
        } = self;
        let bands = model_mag
            .iter_mut()
            .zip(model_mag_err.iter_mut())
            .zip(fiber_mag.iter_mut())
            .zip(q.iter_mut())
            .zip(u.iter_mut())
            .zip(iso_a.iter_mut())
            .zip(iso_b.iter_mut());
        for ((((((mm, me), fm), q), u), a), b) in bands {
            cols.extend([
                ColumnMut::F32(mm),
                ColumnMut::F32(me),
                ColumnMut::F32(fm),
                ColumnMut::F32(q),
                ColumnMut::F32(u),
                ColumnMut::F32(a),
                ColumnMut::F32(b),
            ]);
        }
        cols.push(ColumnMut::U64(&mut self.load_stamp));
        cols
    }

    fn load_stamps(&self) -> &[u64] {
        &self.load_stamp
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldRow {
    pub field_id: u64,
    pub run: i32,
    pub camcol: i32,
    pub field: i32,
    pub load_stamp: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlateRow {
    pub plate_id: u64,
    pub load_stamp: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpecObjRow {
    pub spec_obj_id: u64,
    pub plate_id: u64,
    /// Matching photo object, or 0.
    pub best_obj_id: u64,
    pub z: f64,
    pub load_stamp: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpecLineRow {
    pub line_id: u64,
    pub spec_obj_id: u64,
    /// Angstrom.
    pub wavelength: f64,
    pub ew: f64,
    pub load_stamp: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NeighborPair {
    pub obj_id: u64,
    pub neighbor_obj_id: u64,
    /// Arcminutes.
    pub distance: f64,
    pub load_stamp: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FieldTable {
    pub field_id: Vec<u64>,
    pub run: Vec<i32>,
    pub camcol: Vec<i32>,
    pub field: Vec<i32>,
    pub load_stamp: Vec<u64>,
}

impl FieldTable {
    pub fn push(&mut self, r: &FieldRow) {
        self.field_id.push(r.field_id);
        self.run.push(r.run);
        self.camcol.push(r.camcol);
        self.field.push(r.field);
        self.load_stamp.push(r.load_stamp);
    }

    pub fn row(&self, i: usize) -> FieldRow {
        FieldRow {
            field_id: self.field_id[i],
            run: self.run[i],
            camcol: self.camcol[i],
            field: self.field[i],
            load_stamp: self.load_stamp[i],
        }
    }
}

impl ColumnStore for FieldTable {
    fn name(&self) -> TableName {
        TableName::Field
    }
    fn len(&self) -> usize {
        self.field_id.len()
    }
    fn columns(&self) -> Vec<(&'static str, ColumnRef<'_>)> {
        vec![
            ("fieldID", ColumnRef::U64(&self.field_id)),
            ("run", ColumnRef::I32(&self.run)),
            ("camcol", ColumnRef::I32(&self.camcol)),
            ("field", ColumnRef::I32(&self.field)),
            ("loadStamp", ColumnRef::U64(&self.load_stamp)),
        ]
    }
    fn columns_mut(&mut self) -> Vec<ColumnMut<'_>> {
        vec![
            ColumnMut::U64(&mut self.field_id),
            ColumnMut::I32(&mut self.run),
            ColumnMut::I32(&mut self.camcol),
            ColumnMut::I32(&mut self.field),
            ColumnMut::U64(&mut self.load_stamp),
        ]
    }
    fn load_stamps(&self) -> &[u64] {
        &self.load_stamp
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlateTable {
    pub plate_id: Vec<u64>,
    pub load_stamp: Vec<u64>,
}

impl PlateTable {
    pub fn push(&mut self, r: &PlateRow) {
        self.plate_id.push(r.plate_id);
        self.load_stamp.push(r.load_stamp);
    }

    pub fn row(&self, i: usize) -> PlateRow {
        PlateRow {
            plate_id: self.plate_id[i],
            load_stamp: self.load_stamp[i],
        }
    }
}

impl ColumnStore for PlateTable {
    fn name(&self) -> TableName {
        TableName::Plate
    }
    fn len(&self) -> usize {
        self.plate_id.len()
    }
    fn columns(&self) -> Vec<(&'static str, ColumnRef<'_>)> {
        vec![
            ("plateID", ColumnRef::U64(&self.plate_id)),
            ("loadStamp", ColumnRef::U64(&self.load_stamp)),
        ]
    }
    fn columns_mut(&mut self) -> Vec<ColumnMut<'_>> {
        vec![ColumnMut::U64(&mut self.plate_id), ColumnMut::U64(&mut self.load_stamp)]
    }
    fn load_stamps(&self) -> &[u64] {
        &self.load_stamp
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpecObjTable {
    pub spec_obj_id: Vec<u64>,
    pub plate_id: Vec<u64>,
    pub best_obj_id: Vec<u64>,
    pub z: Vec<f64>,
    pub load_stamp: Vec<u64>,
}

impl SpecObjTable {
    pub fn push(&mut self, r: &SpecObjRow) {
        self.spec_obj_id.push(r.spec_obj_id);
        self.plate_id.push(r.plate_id);
        self.best_obj_id.push(r.best_obj_id);
        self.z.push(r.z);
        self.load_stamp.push(r.load_stamp);
    }

    pub fn row(&self, i: usize) -> SpecObjRow {
        SpecObjRow {
            spec_obj_id: self.spec_obj_id[i],
            plate_id: self.plate_id[i],
            best_obj_id: self.best_obj_id[i],
            z: self.z[i],
            load_stamp: self.load_stamp[i],
        }
    }
}

impl ColumnStore for SpecObjTable {
    fn name(&self) -> TableName {
        TableName::SpecObj
    }
    fn len(&self) -> usize {
        self.spec_obj_id.len()
    }
    fn columns(&self) -> Vec<(&'static str, ColumnRef<'_>)> {
        vec![
            ("specObjID", ColumnRef::U64(&self.spec_obj_id)),
            ("plateID", ColumnRef::U64(&self.plate_id)),
            ("bestObjID", ColumnRef::U64(&self.best_obj_id)),
            ("z", ColumnRef::F64(&self.z)),
            ("loadStamp", ColumnRef::U64(&self.load_stamp)),
        ]
    }
    fn columns_mut(&mut self) -> Vec<ColumnMut<'_>> {
        vec![
            ColumnMut::U64(&mut self.spec_obj_id),
            ColumnMut::U64(&mut self.plate_id),
            ColumnMut::U64(&mut self.best_obj_id),
            ColumnMut::F64(&mut self.z),
            ColumnMut::U64(&mut self.load_stamp),
        ]
    }
    fn load_stamps(&self) -> &[u64] {
        &self.load_stamp
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpecLineTable {
    pub line_id: Vec<u64>,
    pub spec_obj_id: Vec<u64>,
    pub wavelength: Vec<f64>,
    pub ew: Vec<f64>,
    pub load_stamp: Vec<u64>,
}

impl SpecLineTable {
    pub fn push(&mut self, r: &SpecLineRow) {
        self.line_id.push(r.line_id);
        self.spec_obj_id.push(r.spec_obj_id);
        self.wavelength.push(r.wavelength);
        self.ew.push(r.ew);
        self.load_stamp.push(r.load_stamp);
    }

    pub fn row(&self, i: usize) -> SpecLineRow {
        SpecLineRow {
            line_id: self.line_id[i],
            spec_obj_id: self.spec_obj_id[i],
            wavelength: self.wavelength[i],
            ew: self.ew[i],
            load_stamp: self.load_stamp[i],
        }
    }
}

impl ColumnStore for SpecLineTable {
    fn name(&self) -> TableName {
        TableName::SpecLine
    }
    fn len(&self) -> usize {
        self.line_id.len()
    }
    fn columns(&self) -> Vec<(&'static str, ColumnRef<'_>)> {
        vec![
            ("lineID", ColumnRef::U64(&self.line_id)),
            ("specObjID", ColumnRef::U64(&self.spec_obj_id)),
            ("wavelength", ColumnRef::F64(&self.wavelength)),
            ("ew", ColumnRef::F64(&self.ew)),
            ("loadStamp", ColumnRef::U64(&self.load_stamp)),
        ]
    }
    fn columns_mut(&mut self) -> Vec<ColumnMut<'_>> {
        vec![
            ColumnMut::U64(&mut self.line_id),
            ColumnMut::U64(&mut self.spec_obj_id),
            ColumnMut::F64(&mut self.wavelength),
            ColumnMut::F64(&mut self.ew),
            ColumnMut::U64(&mut self.load_stamp),
        ]
    }
    fn load_stamps(&self) -> &[u64] {
        &self.load_stamp
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NeighborTable {
    pub obj_id: Vec<u64>,
    pub neighbor_obj_id: Vec<u64>,
    pub distance: Vec<f64>,
    pub load_stamp: Vec<u64>,
}

impl NeighborTable {
    pub fn push(&mut self, r: &NeighborPair) {
        self.obj_id.push(r.obj_id);
        self.neighbor_obj_id.push(r.neighbor_obj_id);
        self.distance.push(r.distance);
        self.load_stamp.push(r.load_stamp);
    }

    pub fn row(&self, i: usize) -> NeighborPair {
        NeighborPair {
            obj_id: self.obj_id[i],
            neighbor_obj_id: self.neighbor_obj_id[i],
            distance: self.distance[i],
            load_stamp: self.load_stamp[i],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = NeighborPair> + '_ {
        (0..self.len()).map(|i| self.row(i))
    }
}

impl ColumnStore for NeighborTable {
    fn name(&self) -> TableName {
        TableName::Neighbors
    }
    fn len(&self) -> usize {
        self.obj_id.len()
    }
    fn columns(&self) -> Vec<(&'static str, ColumnRef<'_>)> {
        vec![
            ("objID", ColumnRef::U64(&self.obj_id)),
            ("neighborObjID", ColumnRef::U64(&self.neighbor_obj_id)),
            ("distance", ColumnRef::F64(&self.distance)),
            ("loadStamp", ColumnRef::U64(&self.load_stamp)),
        ]
    }
    fn columns_mut(&mut self) -> Vec<ColumnMut<'_>> {
        vec![
            ColumnMut::U64(&mut self.obj_id),
            ColumnMut::U64(&mut self.neighbor_obj_id),
            ColumnMut::F64(&mut self.distance),
            ColumnMut::U64(&mut self.load_stamp),
        ]
    }
    fn load_stamps(&self) -> &[u64] {
        &self.load_stamp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(id: u64, htm: u64) -> PhotoObj {
        PhotoObj {
            obj_id: id,
            htm_id: htm,
            flags: id * 3,
            bands: std::array::from_fn(|b| BandValues {
                model_mag: 10.0 + b as f32,
                ..Default::default()
            }),
            ..Default::default()
        }
    }

    #[test]
    fn push_row_round_trip() {
        let mut t = PhotoTable::default();
        let o = obj(7, 99);
        t.push(&o);
        assert_eq!(t.row(0), o);
        assert_eq!(t.columns().len(), 16 + 35 + 1);
        assert_eq!(t.columns_mut().len(), t.columns().len());
    }

    #[test]
    fn sort_and_retain() {
        let mut t = PhotoTable::default();
        for (id, htm) in [(1, 50), (2, 10), (3, 50), (0, 50)] {
            t.push(&obj(id, htm));
        }
        t.sort_by_htm();
        assert_eq!(t.obj_id, vec![2, 0, 1, 3]);
        assert_eq!(t.flags, vec![6, 0, 3, 9]);
        t.retain_rows(&[true, false, true, false]);
        assert_eq!(t.obj_id, vec![2, 1]);
        assert_eq!(t.model_mag[4], vec![14.0, 14.0]);
    }

    #[test]
    fn table_names_parse() {
        assert_eq!("photoobj".parse::<TableName>().unwrap(), TableName::PhotoObj);
        assert_eq!("SpecLine".parse::<TableName>().unwrap(), TableName::SpecLine);
        assert!(matches!("nope".parse::<TableName>(), Err(Error::UnknownTable(_))));
    }
}

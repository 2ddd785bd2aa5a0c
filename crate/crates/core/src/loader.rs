//! Batch CSV ingestion with per-row integrity checks, an append-only event
//! journal and stamp-window undo.
//!
//! Every inserted row carries a logical load stamp. A load event records the
//! stamp window it used; undoing the event deletes exactly the rows of its
//! table stamped inside that window. Rows that fail a check are skipped and
//! reported in the event's trace as `rowNumber,constraint,detail`.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::catalog::{
    csv_header, Catalog, ColumnStore, Constraint, CsvRecord, FieldReader, FieldRow, NeighborPair, PhotoObj, PlateRow,
    RowError, SpecLineRow, SpecObjRow, TableName,
};
use crate::error::{Error, Result};
use crate::htm::lookup_id;
use crate::sphere::EquatorialCoord;
use crate::synth::SyntheticSky;

/// Tolerance for stored unit-vector components against recomputation.
pub const DERIVED_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventStatus {
    Ok,
    Failed,
    Undone,
}

impl EventStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            EventStatus::Ok => "ok",
            EventStatus::Failed => "failed",
            EventStatus::Undone => "undone",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LoadEvent {
    #[serde(rename = "eventID")]
    pub event_id: u64,
    pub table: TableName,
    pub start_stamp: u64,
    pub stop_stamp: u64,
    pub source_rows: u64,
    pub inserted_rows: u64,
    pub status: EventStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<PathBuf>,
    /// Why a failed event failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// One rejected input row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceLine {
    /// 1-based data row, not counting the header.
    pub row: u64,
    pub constraint: Constraint,
    pub detail: String,
}

impl TraceLine {
    fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record([self.row.to_string(), self.constraint.to_string(), self.detail.clone()])
            .expect("in-memory write");
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }
}

#[derive(Clone, Debug)]
pub struct LoadReport {
    pub event: LoadEvent,
    pub trace: Vec<TraceLine>,
}

/// Load events as JSON lines. Status changes are appended as new lines and
/// the last line for an event id wins.
#[derive(Debug, Default)]
pub struct Journal {
    path: Option<PathBuf>,
    events: Vec<LoadEvent>,
    pending: Vec<LoadEvent>,
}

impl Journal {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Journal path that sits beside a catalog file.
    pub fn path_for(catalog: &Path) -> PathBuf {
        let mut name = catalog.file_name().unwrap_or_default().to_os_string();
        name.push(".events.jsonl");
        catalog.with_file_name(name)
    }

    /// Opens the journal for a catalog file; a missing journal is empty.
    pub fn open_for(catalog: &Path) -> Result<Self> {
        Self::open(Self::path_for(catalog))
    }

    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut j = Journal {
            path: Some(path.clone()),
            ..Default::default()
        };
        let file = match fs::File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(j),
            Err(e) => return Err(Error::io(path, e)),
        };
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(&path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let ev: LoadEvent = serde_json::from_str(&line)
                .map_err(|e| Error::Journal(format!("{}:{}: {e}", path.display(), n + 1)))?;
            j.apply(ev);
        }
        Ok(j)
    }

    fn apply(&mut self, ev: LoadEvent) {
        match self.events.iter_mut().find(|e| e.event_id == ev.event_id) {
            Some(slot) => *slot = ev,
            None => self.events.push(ev),
        }
    }

    fn record(&mut self, ev: LoadEvent) {
        self.apply(ev.clone());
        self.pending.push(ev);
    }

    /// Appends uncommitted lines to the journal file.
    pub fn commit(&mut self) -> Result<()> {
        let Some(path) = &self.path else {
            self.pending.clear();
            return Ok(());
        };
        if self.pending.is_empty() {
            return Ok(());
        }
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        let mut buf = String::new();
        for ev in &self.pending {
            buf.push_str(&serde_json::to_string(ev).expect("event serializes"));
            buf.push('\n');
        }
        f.write_all(buf.as_bytes()).map_err(|e| Error::io(path, e))?;
        self.pending.clear();
        Ok(())
    }

    pub fn events(&self) -> &[LoadEvent] {
        &self.events
    }

    pub fn get(&self, event_id: u64) -> Option<&LoadEvent> {
        self.events.iter().find(|e| e.event_id == event_id)
    }

    fn next_id(&self) -> u64 {
        self.events.iter().map(|e| e.event_id).max().unwrap_or(0) + 1
    }

    fn trace_path(&self, event_id: u64) -> Option<PathBuf> {
        let p = self.path.as_ref()?;
        let mut name = p.file_name().unwrap_or_default().to_os_string();
        name.push(format!(".trace-{event_id}.csv"));
        Some(p.with_file_name(name))
    }
}

/// Loads one CSV file into `table`. Unreadable files and header mismatches
/// produce a failed event rather than an error; only journal or trace I/O
/// errors are returned as `Err`.
pub fn load_csv(
    cat: &mut Catalog,
    journal: &mut Journal,
    table: TableName,
    path: impl AsRef<Path>,
) -> Result<LoadReport> {
    let path = path.as_ref();
    match fs::File::open(path) {
        Ok(f) => load_reader(cat, journal, table, BufReader::new(f)),
        Err(e) => {
            let msg = format!("cannot read {}: {e}", path.display());
            finish(cat, journal, table, Staged::failed(msg))
        }
    }
}

/// Same as [`load_csv`] over any reader.
pub fn load_reader<R: Read>(
    cat: &mut Catalog,
    journal: &mut Journal,
    table: TableName,
    input: R,
) -> Result<LoadReport> {
    let staged = stage(cat, table, input);
    finish(cat, journal, table, staged)
}

/// Typed rows for one table, for loads that bypass CSV.
#[derive(Clone, Debug)]
pub enum Rows {
    Field(Vec<FieldRow>),
    Plate(Vec<PlateRow>),
    Photo(Vec<PhotoObj>),
    SpecObj(Vec<SpecObjRow>),
    SpecLine(Vec<SpecLineRow>),
    Neighbors(Vec<NeighborPair>),
}

impl Rows {
    pub fn table(&self) -> TableName {
        match self {
            Rows::Field(_) => TableName::Field,
            Rows::Plate(_) => TableName::Plate,
            Rows::Photo(_) => TableName::PhotoObj,
            Rows::SpecObj(_) => TableName::SpecObj,
            Rows::SpecLine(_) => TableName::SpecLine,
            Rows::Neighbors(_) => TableName::Neighbors,
        }
    }
}

/// Loads typed rows under the same checks as a CSV load. Derived columns
/// and load stamps in the input are ignored and recomputed.
pub fn load_rows(cat: &mut Catalog, journal: &mut Journal, rows: Rows) -> Result<LoadReport> {
    let table = rows.table();
    let mut ctx = Context::new(cat, table);
    let mut trace = Vec::new();
    fn keep<T: Ingest>(ctx: &mut Context, rows: Vec<T>, trace: &mut Vec<TraceLine>) -> Vec<T> {
        let mut out = Vec::with_capacity(rows.len());
        for (i, mut r) in rows.into_iter().enumerate() {
            match r.check(ctx) {
                Ok(()) => out.push(r),
                Err(e) => trace.push(TraceLine {
                    row: i as u64 + 1,
                    constraint: e.constraint,
                    detail: e.detail,
                }),
            }
        }
        out
    }
    let source_rows;
    let rows = match rows {
        Rows::Field(v) => {
            source_rows = v.len();
            Rows::Field(keep(&mut ctx, v, &mut trace))
        }
        Rows::Plate(v) => {
            source_rows = v.len();
            Rows::Plate(keep(&mut ctx, v, &mut trace))
        }
        Rows::Photo(v) => {
            source_rows = v.len();
            Rows::Photo(keep(&mut ctx, v, &mut trace))
        }
        Rows::SpecObj(v) => {
            source_rows = v.len();
            Rows::SpecObj(keep(&mut ctx, v, &mut trace))
        }
        Rows::SpecLine(v) => {
            source_rows = v.len();
            Rows::SpecLine(keep(&mut ctx, v, &mut trace))
        }
        Rows::Neighbors(v) => {
            source_rows = v.len();
            Rows::Neighbors(keep(&mut ctx, v, &mut trace))
        }
    };
    let staged = Staged {
        source_rows: source_rows as u64,
        rows: Some(rows),
        trace,
        failure: None,
    };
    finish(cat, journal, table, staged)
}

/// Loads a synthetic sky table by table in dependency order.
pub fn load_sky(cat: &mut Catalog, journal: &mut Journal, sky: &SyntheticSky) -> Result<Vec<LoadReport>> {
    [
        Rows::Field(sky.fields.clone()),
        Rows::Plate(sky.plates.clone()),
        Rows::Photo(sky.photo.clone()),
        Rows::SpecObj(sky.spec_objs.clone()),
        Rows::SpecLine(sky.spec_lines.clone()),
    ]
    .into_iter()
    .map(|rows| load_rows(cat, journal, rows))
    .collect()
}

struct Staged {
    source_rows: u64,
    rows: Option<Rows>,
    trace: Vec<TraceLine>,
    failure: Option<String>,
}

impl Staged {
    fn failed(msg: String) -> Self {
        Staged {
            source_rows: 0,
            rows: None,
            trace: Vec::new(),
            failure: Some(msg),
        }
    }
}

fn stage<R: Read>(cat: &Catalog, table: TableName, input: R) -> Staged {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let header = match rdr.headers() {
        Ok(h) => h.clone(),
        Err(e) => return Staged::failed(format!("unreadable header: {e}")),
    };
    let expected = csv_header(table);
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    let got_set: HashSet<&str> = got.iter().copied().collect();
    let want_set: HashSet<&str> = expected.iter().copied().collect();
    if got_set != want_set || got.len() != expected.len() {
        let missing: Vec<&str> = expected.iter().copied().filter(|c| !got_set.contains(c)).collect();
        let extra: Vec<&str> = got.iter().copied().filter(|c| !want_set.contains(c)).collect();
        return Staged::failed(format!(
            "header does not match {table}: missing [{}], unexpected [{}]",
            missing.join(","),
            extra.join(",")
        ));
    }
    let columns = got.iter().enumerate().map(|(i, c)| (c.to_string(), i)).collect();
    let mut ctx = Context::new(cat, table);
    let mut trace = Vec::new();
    let mut source_rows = 0u64;
    let mut rows = match table {
        TableName::Field => Rows::Field(Vec::new()),
        TableName::Plate => Rows::Plate(Vec::new()),
        TableName::PhotoObj => Rows::Photo(Vec::new()),
        TableName::SpecObj => Rows::SpecObj(Vec::new()),
        TableName::SpecLine => Rows::SpecLine(Vec::new()),
        TableName::Neighbors => Rows::Neighbors(Vec::new()),
    };
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                if e.is_io_error() {
                    return Staged::failed(format!("read error after {source_rows} rows: {e}"));
                }
                source_rows += 1;
                trace.push(TraceLine {
                    row: source_rows,
                    constraint: Constraint::Type,
                    detail: e.to_string(),
                });
                continue;
            }
        }
        source_rows += 1;
        let reader = FieldReader::new(&columns, &record);
        let outcome = match &mut rows {
            Rows::Field(v) => accept(&mut ctx, &reader, v),
            Rows::Plate(v) => accept(&mut ctx, &reader, v),
            Rows::Photo(v) => accept(&mut ctx, &reader, v),
            Rows::SpecObj(v) => accept(&mut ctx, &reader, v),
            Rows::SpecLine(v) => accept(&mut ctx, &reader, v),
            Rows::Neighbors(v) => accept(&mut ctx, &reader, v),
        };
        if let Err(e) = outcome {
            trace.push(TraceLine {
                row: source_rows,
                constraint: e.constraint,
                detail: e.detail,
            });
        }
    }
    Staged {
        source_rows,
        rows: Some(rows),
        trace,
        failure: None,
    }
}

fn accept<T: Ingest>(ctx: &mut Context, r: &FieldReader<'_>, out: &mut Vec<T>) -> Result<(), RowError> {
    let mut row = T::from_record(r)?;
    row.check(ctx)?;
    out.push(row);
    Ok(())
}

fn finish(cat: &mut Catalog, journal: &mut Journal, table: TableName, staged: Staged) -> Result<LoadReport> {
    let event_id = journal.next_id();
    let start = cat.tick();
    let mut stamp = start;
    let mut next_stamp = |cat: &mut Catalog, first: &mut bool| {
        if !std::mem::take(first) {
            stamp = cat.tick();
        }
        stamp
    };
    let mut first = true;
    let mut inserted = 0u64;
    match staged.rows {
        Some(Rows::Field(rows)) => {
            for mut r in rows {
                r.load_stamp = next_stamp(cat, &mut first);
                cat.fields.push(&r);
                inserted += 1;
            }
        }
        Some(Rows::Plate(rows)) => {
            for mut r in rows {
                r.load_stamp = next_stamp(cat, &mut first);
                cat.plates.push(&r);
                inserted += 1;
            }
        }
        Some(Rows::Photo(mut rows)) => {
            for r in &mut rows {
                r.load_stamp = next_stamp(cat, &mut first);
            }
            inserted = rows.len() as u64;
            cat.append_photo(&rows);
        }
        Some(Rows::SpecObj(rows)) => {
            for mut r in rows {
                r.load_stamp = next_stamp(cat, &mut first);
                cat.spec_objs.push(&r);
                inserted += 1;
            }
        }
        Some(Rows::SpecLine(rows)) => {
            for mut r in rows {
                r.load_stamp = next_stamp(cat, &mut first);
                cat.spec_lines.push(&r);
                inserted += 1;
            }
        }
        Some(Rows::Neighbors(rows)) => {
            for mut r in rows {
                r.load_stamp = next_stamp(cat, &mut first);
                cat.neighbors.push(&r);
                inserted += 1;
            }
        }
        None => {}
    }
    let stop = stamp;

    let trace_path = if staged.trace.is_empty() {
        None
    } else {
        journal.trace_path(event_id)
    };
    if let Some(p) = &trace_path {
        let mut text = String::from("rowNumber,constraint,detail\n");
        for t in &staged.trace {
            text.push_str(&t.to_csv());
        }
        fs::write(p, text).map_err(|e| Error::io(p, e))?;
    }
    let event = LoadEvent {
        event_id,
        table,
        start_stamp: start,
        stop_stamp: stop,
        source_rows: staged.source_rows,
        inserted_rows: inserted,
        status: if staged.failure.is_some() {
            EventStatus::Failed
        } else {
            EventStatus::Ok
        },
        trace_path,
        detail: staged.failure,
    };
    journal.record(event.clone());
    Ok(LoadReport {
        event,
        trace: staged.trace,
    })
}

/// Key sets consulted by per-row checks, built once per load.
#[derive(Default)]
struct Context {
    own: HashSet<(u64, u64)>,
    fields: HashSet<u64>,
    plates: HashSet<u64>,
    photo: HashSet<u64>,
    spec: HashSet<u64>,
    index_depth: u32,
}

impl Context {
    fn new(cat: &Catalog, table: TableName) -> Self {
        let mut c = Context {
            index_depth: cat.index_depth(),
            ..Default::default()
        };
        let set = |v: &[u64]| v.iter().copied().collect::<HashSet<u64>>();
        let pairs = |v: &[u64]| v.iter().map(|&k| (k, 0)).collect::<HashSet<_>>();
        match table {
            TableName::Field => c.own = pairs(&cat.fields.field_id),
            TableName::Plate => c.own = pairs(&cat.plates.plate_id),
            TableName::PhotoObj => {
                c.own = pairs(&cat.photo.obj_id);
                c.fields = set(&cat.fields.field_id);
            }
            TableName::SpecObj => {
                c.own = pairs(&cat.spec_objs.spec_obj_id);
                c.plates = set(&cat.plates.plate_id);
                c.photo = set(&cat.photo.obj_id);
            }
            TableName::SpecLine => {
                c.own = pairs(&cat.spec_lines.line_id);
                c.spec = set(&cat.spec_objs.spec_obj_id);
            }
            TableName::Neighbors => {
                let n = &cat.neighbors;
                c.own = n
                    .obj_id
                    .iter()
                    .copied()
                    .zip(n.neighbor_obj_id.iter().copied())
                    .collect();
                c.photo = set(&cat.photo.obj_id);
            }
        }
        c
    }

    fn claim(&mut self, key: (u64, u64), what: &str) -> Result<(), RowError> {
        if self.own.insert(key) {
            Ok(())
        } else {
            Err(RowError::new(Constraint::PrimaryKey, format!("duplicate {what}")))
        }
    }
}

fn fk(set: &HashSet<u64>, key: u64, what: &str) -> Result<(), RowError> {
    if set.contains(&key) {
        Ok(())
    } else {
        Err(RowError::new(Constraint::ForeignKey, format!("{what} {key} not found")))
    }
}

/// Row checks against already-loaded tables. Runs after parsing; the
/// primary key is claimed last so a rejected row does not reserve it.
trait Ingest: CsvRecord {
    fn check(&mut self, ctx: &mut Context) -> Result<(), RowError>;
}

impl Ingest for FieldRow {
    fn check(&mut self, ctx: &mut Context) -> Result<(), RowError> {
        ctx.claim((self.field_id, 0), &format!("fieldID {}", self.field_id))
    }
}

impl Ingest for PlateRow {
    fn check(&mut self, ctx: &mut Context) -> Result<(), RowError> {
        ctx.claim((self.plate_id, 0), &format!("plateID {}", self.plate_id))
    }
}

impl Ingest for PhotoObj {
    fn check(&mut self, ctx: &mut Context) -> Result<(), RowError> {
        if !(0.0..360.0).contains(&self.ra) {
            return Err(RowError::new(
                Constraint::Domain,
                format!("ra {} outside [0, 360)", self.ra),
            ));
        }
        let pos =
            EquatorialCoord::new(self.ra, self.dec).map_err(|e| RowError::new(Constraint::Domain, e.to_string()))?;
        fk(&ctx.fields, self.field_id, "fieldID")?;
        let v = pos.to_vec();
        self.cx = v.x;
        self.cy = v.y;
        self.cz = v.z;
        self.htm_id = lookup_id(&v, ctx.index_depth)
            .map_err(|e| RowError::new(Constraint::Derived, e.to_string()))?
            .raw();
        ctx.claim((self.obj_id, 0), &format!("objID {}", self.obj_id))
    }
}

impl Ingest for SpecObjRow {
    fn check(&mut self, ctx: &mut Context) -> Result<(), RowError> {
        fk(&ctx.plates, self.plate_id, "plateID")?;
        if self.best_obj_id != 0 {
            fk(&ctx.photo, self.best_obj_id, "bestObjID")?;
        }
        ctx.claim((self.spec_obj_id, 0), &format!("specObjID {}", self.spec_obj_id))
    }
}

impl Ingest for SpecLineRow {
    fn check(&mut self, ctx: &mut Context) -> Result<(), RowError> {
        fk(&ctx.spec, self.spec_obj_id, "specObjID")?;
        ctx.claim((self.line_id, 0), &format!("lineID {}", self.line_id))
    }
}

impl Ingest for NeighborPair {
    fn check(&mut self, ctx: &mut Context) -> Result<(), RowError> {
        if self.obj_id == self.neighbor_obj_id {
            return Err(RowError::new(Constraint::Domain, "object paired with itself"));
        }
        if self.distance < 0.0 {
            return Err(RowError::new(
                Constraint::Domain,
                format!("negative distance {}", self.distance),
            ));
        }
        fk(&ctx.photo, self.obj_id, "objID")?;
        fk(&ctx.photo, self.neighbor_obj_id, "neighborObjID")?;
        ctx.claim(
            (self.obj_id, self.neighbor_obj_id),
            &format!("pair ({}, {})", self.obj_id, self.neighbor_obj_id),
        )
    }
}

/// Removes the rows an event inserted and marks it undone. Refuses when rows
/// that remain elsewhere still reference keys the undo would delete.
pub fn undo(cat: &mut Catalog, journal: &mut Journal, event_id: u64) -> Result<u64> {
    let ev = journal.get(event_id).cloned().ok_or(Error::UnknownEvent(event_id))?;
    if ev.status == EventStatus::Undone {
        return Err(Error::AlreadyUndone(event_id));
    }
    if let Some(later) = journal.events().iter().find(|e| {
        e.event_id > event_id
            && e.table == ev.table
            && e.status != EventStatus::Undone
            && e.inserted_rows > 0
            && e.start_stamp <= ev.stop_stamp
            && ev.start_stamp <= e.stop_stamp
    }) {
        return Err(Error::UndoConflict {
            event: event_id,
            detail: format!("event {} overlaps its stamp window", later.event_id),
        });
    }
    let window = ev.start_stamp..=ev.stop_stamp;
    let remove: Vec<bool> = cat
        .table(ev.table)
        .load_stamps()
        .iter()
        .map(|s| window.contains(s))
        .collect();
    let count = remove.iter().filter(|&&r| r).count() as u64;
    if count > 0 {
        check_dependents(cat, ev.table, &remove).map_err(|detail| Error::UndoConflict {
            event: event_id,
            detail,
        })?;
        let keep: Vec<bool> = remove.iter().map(|r| !r).collect();
        cat.table_mut(ev.table).retain_rows(&keep);
    }
    journal.record(LoadEvent {
        status: EventStatus::Undone,
        ..ev
    });
    Ok(count)
}

fn check_dependents(cat: &Catalog, table: TableName, remove: &[bool]) -> std::result::Result<(), String> {
    let gone =
        |keys: &[u64]| -> HashSet<u64> { keys.iter().zip(remove).filter(|(_, &r)| r).map(|(&k, _)| k).collect() };
    let refs = |what: &str, gone: &HashSet<u64>, deps: &[(&str, &[u64])]| {
        for (dep, col) in deps {
            if let Some(k) = col.iter().find(|k| gone.contains(k)) {
                return Err(format!("{dep} still references {what} {k}"));
            }
        }
        Ok(())
    };
    match table {
        TableName::Field => refs(
            "fieldID",
            &gone(&cat.fields.field_id),
            &[("PhotoObj", &cat.photo.field_id)],
        ),
        TableName::Plate => refs(
            "plateID",
            &gone(&cat.plates.plate_id),
            &[("SpecObj", &cat.spec_objs.plate_id)],
        ),
        TableName::PhotoObj => refs(
            "objID",
            &gone(&cat.photo.obj_id),
            &[
                ("SpecObj", &cat.spec_objs.best_obj_id),
                ("Neighbors", &cat.neighbors.obj_id),
                ("Neighbors", &cat.neighbors.neighbor_obj_id),
            ],
        ),
        TableName::SpecObj => refs(
            "specObjID",
            &gone(&cat.spec_objs.spec_obj_id),
            &[("SpecLine", &cat.spec_lines.spec_obj_id)],
        ),
        TableName::SpecLine | TableName::Neighbors => Ok(()),
    }
}

/// One integrity problem found by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub table: TableName,
    /// Storage row index.
    pub row: usize,
    pub constraint: Constraint,
    pub detail: String,
}

/// Reports every referential, null, key, derived-column and ordering
/// violation in storage order, table by table.
pub fn validate(cat: &Catalog) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |table, row, constraint, detail: String| {
        out.push(Violation {
            table,
            row,
            constraint,
            detail,
        })
    };
    let set = |v: &[u64]| v.iter().copied().collect::<HashSet<u64>>();
    let fields = set(&cat.fields.field_id);
    let plates = set(&cat.plates.plate_id);
    let photo = set(&cat.photo.obj_id);
    let spec = set(&cat.spec_objs.spec_obj_id);

    for t in TableName::ALL {
        for (name, col) in cat.table(t).columns() {
            for row in col.nan_rows() {
                push(t, row, Constraint::NotNull, format!("{name} is NaN"));
            }
        }
    }

    let dup = |table: TableName,
               keys: &mut dyn Iterator<Item = (u64, u64)>,
               push: &mut dyn FnMut(TableName, usize, Constraint, String)| {
        let mut seen = HashSet::new();
        for (row, k) in keys.enumerate() {
            if !seen.insert(k) {
                push(table, row, Constraint::PrimaryKey, format!("duplicate key {k:?}"));
            }
        }
    };
    dup(
        TableName::Field,
        &mut cat.fields.field_id.iter().map(|&k| (k, 0)),
        &mut push,
    );
    dup(
        TableName::Plate,
        &mut cat.plates.plate_id.iter().map(|&k| (k, 0)),
        &mut push,
    );
    dup(
        TableName::PhotoObj,
        &mut cat.photo.obj_id.iter().map(|&k| (k, 0)),
        &mut push,
    );
    dup(
        TableName::SpecObj,
        &mut cat.spec_objs.spec_obj_id.iter().map(|&k| (k, 0)),
        &mut push,
    );
    dup(
        TableName::SpecLine,
        &mut cat.spec_lines.line_id.iter().map(|&k| (k, 0)),
        &mut push,
    );
    dup(
        TableName::Neighbors,
        &mut cat
            .neighbors
            .obj_id
            .iter()
            .copied()
            .zip(cat.neighbors.neighbor_obj_id.iter().copied()),
        &mut push,
    );

    let p = &cat.photo;
    for i in 0..p.len() {
        if !fields.contains(&p.field_id[i]) {
            push(
                TableName::PhotoObj,
                i,
                Constraint::ForeignKey,
                format!("fieldID {} not in Field", p.field_id[i]),
            );
        }
        match EquatorialCoord::new(p.ra[i], p.dec[i]) {
            Err(e) => push(TableName::PhotoObj, i, Constraint::Domain, e.to_string()),
            Ok(pos) => {
                let v = pos.to_vec();
                let off = (v.x - p.cx[i])
                    .abs()
                    .max((v.y - p.cy[i]).abs())
                    .max((v.z - p.cz[i]).abs());
                if off.is_nan() || off > DERIVED_TOLERANCE {
                    push(
                        TableName::PhotoObj,
                        i,
                        Constraint::Derived,
                        format!("cx,cy,cz off by {off:e}"),
                    );
                }
                match lookup_id(&v, cat.index_depth()) {
                    Ok(id) if id.raw() == p.htm_id[i] => {}
                    Ok(id) => push(
                        TableName::PhotoObj,
                        i,
                        Constraint::Derived,
                        format!("htmID {} but position gives {}", p.htm_id[i], id.raw()),
                    ),
                    Err(e) => push(TableName::PhotoObj, i, Constraint::Derived, e.to_string()),
                }
            }
        }
        if i > 0 && (p.htm_id[i - 1], p.obj_id[i - 1]) > (p.htm_id[i], p.obj_id[i]) {
            push(
                TableName::PhotoObj,
                i,
                Constraint::SortOrder,
                "row precedes its predecessor in (htmID, objID)".into(),
            );
        }
    }
    let s = &cat.spec_objs;
    for i in 0..s.len() {
        if !plates.contains(&s.plate_id[i]) {
            push(
                TableName::SpecObj,
                i,
                Constraint::ForeignKey,
                format!("plateID {} not in Plate", s.plate_id[i]),
            );
        }
        if s.best_obj_id[i] != 0 && !photo.contains(&s.best_obj_id[i]) {
            push(
                TableName::SpecObj,
                i,
                Constraint::ForeignKey,
                format!("bestObjID {} not in PhotoObj", s.best_obj_id[i]),
            );
        }
    }
    for (i, id) in cat.spec_lines.spec_obj_id.iter().enumerate() {
        if !spec.contains(id) {
            push(
                TableName::SpecLine,
                i,
                Constraint::ForeignKey,
                format!("specObjID {id} not in SpecObj"),
            );
        }
    }
    let n = &cat.neighbors;
    for i in 0..n.len() {
        for (what, id) in [("objID", n.obj_id[i]), ("neighborObjID", n.neighbor_obj_id[i])] {
            if !photo.contains(&id) {
                push(
                    TableName::Neighbors,
                    i,
                    Constraint::ForeignKey,
                    format!("{what} {id} not in PhotoObj"),
                );
            }
        }
        if n.obj_id[i] == n.neighbor_obj_id[i] {
            push(
                TableName::Neighbors,
                i,
                Constraint::Domain,
                "object paired with itself".into(),
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::write_rows;

    fn csv_of<T: CsvRecord>(rows: &[T]) -> Vec<u8> {
        let mut buf = Vec::new();
        write_rows(rows, &mut buf).unwrap();
        buf
    }

    fn fields(ids: impl IntoIterator<Item = u64>) -> Vec<FieldRow> {
        ids.into_iter()
            .map(|id| FieldRow {
                field_id: id,
                run: 752,
                camcol: 1,
                field: id as i32,
                load_stamp: 0,
            })
            .collect()
    }

    fn photos(n: u64, field_of: impl Fn(u64) -> u64) -> Vec<PhotoObj> {
        (1..=n)
            .map(|i| PhotoObj {
                obj_id: i,
                field_id: field_of(i),
                ra: (i as f64 * 3.3) % 360.0,
                dec: (i as f64 * 1.7) % 80.0 - 40.0,
                ..Default::default()
            })
            .collect()
    }

    fn load<T: CsvRecord>(cat: &mut Catalog, j: &mut Journal, rows: &[T]) -> LoadReport {
        load_reader(cat, j, T::TABLE, csv_of(rows).as_slice()).unwrap()
    }

    #[test]
    fn clean_load() {
        let mut cat = Catalog::new(12).unwrap();
        let mut j = Journal::in_memory();
        let r = load(&mut cat, &mut j, &fields(1..=5));
        assert_eq!((r.event.source_rows, r.event.inserted_rows), (5, 5));
        let r = load(&mut cat, &mut j, &photos(100, |i| i % 5 + 1));
        assert_eq!(r.event.status, EventStatus::Ok);
        assert_eq!((r.event.source_rows, r.event.inserted_rows), (100, 100));
        assert_eq!(r.event.stop_stamp - r.event.start_stamp, 99);
        assert!(validate(&cat).is_empty());
        assert_eq!(j.events().len(), 2);
    }

    #[test]
    fn foreign_key_rejections_are_traced() {
        let mut cat = Catalog::new(12).unwrap();
        let mut j = Journal::in_memory();
        load(&mut cat, &mut j, &fields(1..=5));
        let r = load(&mut cat, &mut j, &photos(100, |i| if i % 33 == 0 { 77 } else { 1 }));
        assert_eq!((r.event.source_rows, r.event.inserted_rows), (100, 97));
        assert_eq!(r.trace.len(), 3);
        assert!(r.trace.iter().all(|t| t.constraint == Constraint::ForeignKey));
        assert_eq!(r.trace[0].row, 33);
        assert_eq!(cat.photo().len(), 97);
    }

    #[test]
    fn header_mismatch_fails_the_event() {
        let mut cat = Catalog::default();
        let mut j = Journal::in_memory();
        let r = load_reader(&mut cat, &mut j, TableName::PhotoObj, "ra,dec\n1,2\n".as_bytes()).unwrap();
        assert_eq!(r.event.status, EventStatus::Failed);
        assert_eq!(r.event.inserted_rows, 0);
        assert!(r.event.detail.unwrap().contains("missing"));
        let r = load_csv(&mut cat, &mut j, TableName::Field, "/nonexistent/Field.csv").unwrap();
        assert_eq!(r.event.status, EventStatus::Failed);
        assert!(r.event.start_stamp <= r.event.stop_stamp);
    }

    #[test]
    fn bad_rows() {
        let mut cat = Catalog::default();
        let mut j = Journal::in_memory();
        let text = "fieldID,run,camcol,field\n1,752,1,11\n1,752,1,12\n,752,1,13\nx,752,1,14\n2,752\n";
        let r = load_reader(&mut cat, &mut j, TableName::Field, text.as_bytes()).unwrap();
        let got: Vec<(u64, Constraint)> = r.trace.iter().map(|t| (t.row, t.constraint)).collect();
        assert_eq!(
            got,
            vec![
                (2, Constraint::PrimaryKey),
                (3, Constraint::NotNull),
                (4, Constraint::Type),
                (5, Constraint::NotNull)
            ]
        );
        assert_eq!(r.event.inserted_rows, 1);
    }

    #[test]
    fn undo_restores_digest() {
        let mut cat = Catalog::new(14).unwrap();
        let mut j = Journal::in_memory();
        load(&mut cat, &mut j, &fields(1..=3));
        let a = load(&mut cat, &mut j, &photos(50, |i| i % 3 + 1));
        let d1 = cat.digest();
        let mut more = photos(80, |_| 2);
        for o in &mut more {
            o.obj_id += 1000;
        }
        let b = load(&mut cat, &mut j, &more);
        assert_ne!(cat.digest(), d1);
        assert_eq!(undo(&mut cat, &mut j, b.event.event_id).unwrap(), 80);
        assert_eq!(cat.digest(), d1);
        assert!(matches!(
            undo(&mut cat, &mut j, b.event.event_id),
            Err(Error::AlreadyUndone(_))
        ));
        assert!(matches!(undo(&mut cat, &mut j, 99), Err(Error::UnknownEvent(99))));
        // fields are still referenced by the first photo load
        assert!(matches!(undo(&mut cat, &mut j, 1), Err(Error::UndoConflict { .. })));
        assert_eq!(undo(&mut cat, &mut j, a.event.event_id).unwrap(), 50);
        assert_eq!(undo(&mut cat, &mut j, 1).unwrap(), 3);
        assert_eq!(cat.digest(), Catalog::new(14).unwrap().digest());
    }

    #[test]
    fn typed_rows_match_csv_loads() {
        let sky = crate::synth::generate(400, 2);
        let mut a = Catalog::new(16).unwrap();
        let mut ja = Journal::in_memory();
        let reports = load_sky(&mut a, &mut ja, &sky).unwrap();
        assert!(reports
            .iter()
            .all(|r| r.trace.is_empty() && r.event.status == EventStatus::Ok));
        let mut b = Catalog::new(16).unwrap();
        let mut jb = Journal::in_memory();
        load(&mut b, &mut jb, &sky.fields);
        load(&mut b, &mut jb, &sky.plates);
        load(&mut b, &mut jb, &sky.photo);
        load(&mut b, &mut jb, &sky.spec_objs);
        load(&mut b, &mut jb, &sky.spec_lines);
        assert_eq!(a.digest(), b.digest());
        assert!(validate(&a).is_empty());
    }

    #[test]
    fn validate_reports() {
        let mut cat = Catalog::new(10).unwrap();
        let mut j = Journal::in_memory();
        load(&mut cat, &mut j, &fields([1]));
        load(&mut cat, &mut j, &photos(10, |_| 1));
        cat.spec_lines.push(&SpecLineRow {
            line_id: 1,
            spec_obj_id: 999,
            wavelength: 5000.0,
            ew: 1.0,
            load_stamp: 0,
        });
        let v = validate(&cat);
        assert_eq!(v.len(), 1);
        assert_eq!(
            (v[0].table, v[0].row, v[0].constraint),
            (TableName::SpecLine, 0, Constraint::ForeignKey)
        );
        cat.spec_lines = Default::default();
        cat.photo.htm_id[4] ^= 1;
        let v = validate(&cat);
        assert!(v.iter().any(|x| x.constraint == Constraint::Derived && x.row == 4));
        assert_eq!(validate(&cat), v);
    }

    #[test]
    fn journal_file_last_line_wins() {
        let dir = tempfile::tempdir().unwrap();
        let cat_path = dir.path().join("sky.cat");
        let mut cat = Catalog::default();
        let mut j = Journal::open_for(&cat_path).unwrap();
        load(&mut cat, &mut j, &fields(1..=2));
        let text = "fieldID,run,camcol,field\n1,752,1,11\n";
        let r = load_reader(&mut cat, &mut j, TableName::Field, text.as_bytes()).unwrap();
        let trace = fs::read_to_string(r.event.trace_path.as_ref().unwrap()).unwrap();
        assert!(trace.lines().nth(1).unwrap().starts_with("1,primary_key,"), "{trace}");
        undo(&mut cat, &mut j, 1).unwrap();
        j.commit().unwrap();
        let lines = fs::read_to_string(Journal::path_for(&cat_path)).unwrap();
        assert_eq!(lines.lines().count(), 3);
        let back = Journal::open_for(&cat_path).unwrap();
        assert_eq!(back.events().len(), 2);
        assert_eq!(back.get(1).unwrap().status, EventStatus::Undone);
        assert_eq!(back.get(2).unwrap().inserted_rows, 0);
    }
}

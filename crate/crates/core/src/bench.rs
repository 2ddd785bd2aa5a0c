//! Sequential-scan benchmark over the photo table.
//!
//! A warm run scans a catalog already in memory. A cold run first reads and
//! decodes the catalog file, so its elapsed time includes the load.

use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::catalog::{Catalog, ColumnStore};
use crate::error::{Error, Result};
use crate::queries::color_count_value;

/// Threshold of the `colorcut` predicate, `modelMag_r - modelMag_g > 1`.
pub const COLORCUT_THRESHOLD: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanPredicate {
    CountAll,
    Colorcut,
}

impl ScanPredicate {
    pub fn as_str(self) -> &'static str {
        match self {
            ScanPredicate::CountAll => "count_all",
            ScanPredicate::Colorcut => "colorcut",
        }
    }

    /// Bytes read per row: the 8-byte key column, or two 4-byte magnitudes.
    pub fn bytes_per_row(self) -> u64 {
        8
    }

    /// Runs the scan and returns the matching row count.
    pub fn scan(self, cat: &Catalog) -> u64 {
        match self {
            ScanPredicate::CountAll => cat.photo().obj_id.iter().fold(0, |n, &id| {
                std::hint::black_box(id);
                n + 1
            }),
            ScanPredicate::Colorcut => color_count_value(cat, COLORCUT_THRESHOLD),
        }
    }
}

impl FromStr for ScanPredicate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "count_all" => Ok(ScanPredicate::CountAll),
            "colorcut" => Ok(ScanPredicate::Colorcut),
            _ => Err(Error::UnknownPredicate(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Temperature {
    Warm,
    Cold,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchReport {
    pub predicate: ScanPredicate,
    pub mode: Temperature,
    pub matched: u64,
    pub rows_scanned: u64,
    pub bytes_scanned: u64,
    /// Median over runs, seconds.
    pub elapsed: f64,
    pub rows_per_sec: f64,
    pub bytes_per_sec: f64,
    pub runs: usize,
}

impl BenchReport {
    fn new(predicate: ScanPredicate, mode: Temperature, matched: u64, rows: u64, times: &mut [Duration]) -> Self {
        times.sort();
        let secs = times[times.len() / 2].as_secs_f64().max(1e-9);
        let bytes = rows * predicate.bytes_per_row();
        Self {
            predicate,
            mode,
            matched,
            rows_scanned: rows,
            bytes_scanned: bytes,
            elapsed: secs,
            rows_per_sec: rows as f64 / secs,
            bytes_per_sec: bytes as f64 / secs,
            runs: times.len(),
        }
    }
}

/// Median of `runs` warm scans.
pub fn bench_warm(cat: &Catalog, predicate: ScanPredicate, runs: usize) -> BenchReport {
    let mut times = Vec::with_capacity(runs.max(1));
    let mut matched = 0;
    for _ in 0..runs.max(1) {
        let t = Instant::now();
        matched = std::hint::black_box(predicate.scan(std::hint::black_box(cat)));
        times.push(t.elapsed());
    }
    BenchReport::new(
        predicate,
        Temperature::Warm,
        matched,
        cat.photo().len() as u64,
        &mut times,
    )
}

/// Median of `runs` open-then-scan passes over a catalog file.
pub fn bench_cold(path: &Path, predicate: ScanPredicate, runs: usize) -> Result<BenchReport> {
    let mut times = Vec::with_capacity(runs.max(1));
    let (mut matched, mut rows) = (0, 0);
    for _ in 0..runs.max(1) {
        let t = Instant::now();
        let cat = Catalog::open(path)?;
        matched = std::hint::black_box(predicate.scan(&cat));
        times.push(t.elapsed());
        rows = cat.photo().len() as u64;
    }
    Ok(BenchReport::new(
        predicate,
        Temperature::Cold,
        matched,
        rows,
        &mut times,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::PhotoObj;

    #[test]
    fn predicates() {
        assert_eq!("colorcut".parse::<ScanPredicate>().unwrap(), ScanPredicate::Colorcut);
        assert!(matches!(
            "fast".parse::<ScanPredicate>(),
            Err(Error::UnknownPredicate(_))
        ));
    }

    #[test]
    fn warm_and_cold_scan_every_row() {
        let mut cat = Catalog::new(8).unwrap();
        let rows: Vec<PhotoObj> = (0..100)
            .map(|i| {
                let mut o = PhotoObj {
                    obj_id: i + 1,
                    ra: i as f64,
                    ..Default::default()
                };
                o.bands[2].model_mag = if i % 4 == 0 { 20.0 } else { 0.0 };
                cat.derive_position(&mut o).unwrap();
                o
            })
            .collect();
        cat.append_photo(&rows);
        let warm = bench_warm(&cat, ScanPredicate::Colorcut, 3);
        assert_eq!((warm.rows_scanned, warm.matched), (100, 25));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.cat");
        cat.save(&path).unwrap();
        let cold = bench_cold(&path, ScanPredicate::CountAll, 3).unwrap();
        assert_eq!((cold.rows_scanned, cold.matched), (100, 100));
        assert!(cold.elapsed > 0.0);
    }
}

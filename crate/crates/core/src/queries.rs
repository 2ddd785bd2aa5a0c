//! Spatial access functions and the named data-mining queries.
//!
//! Proximity searches cover a cap at a coarse search depth, re-express the
//! cover at the catalog's index depth, read the matching row slices and
//! keep rows whose arc distance is within the radius (closed).

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{Band, Catalog, ColumnStore, NeighborPair, NeighborTable, View};
use crate::error::{Error, Result};
use crate::htm::nominal_edge_arcmin;
use crate::region::{cover, Cap, HtmRangeSet, DEFAULT_COVER_BUDGET};
use crate::sphere::{arc_angle, chord_arcmin, EquatorialCoord, UnitVector, MAX_ARCMIN};

/// Neighbor search radius used when none is given.
pub const DEFAULT_NEIGHBOR_RADIUS: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NearbyHit {
    #[serde(rename = "objID")]
    pub obj_id: u64,
    /// Arcminutes.
    pub distance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Asteroid {
    #[serde(rename = "objID")]
    pub obj_id: u64,
    pub velocity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MoverPair {
    #[serde(rename = "rId")]
    pub r_id: u64,
    #[serde(rename = "gId")]
    pub g_id: u64,
}

/// Row and time quotas for interactive queries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QueryLimits {
    pub max_rows: usize,
    pub timeout: Duration,
}

impl Default for QueryLimits {
    fn default() -> Self {
        Self {
            max_rows: 1000,
            timeout: Duration::from_secs(30),
        }
    }
}

impl QueryLimits {
    pub fn unlimited() -> Self {
        Self {
            max_rows: usize::MAX,
            timeout: Duration::MAX,
        }
    }

    /// Drains `rows` until exhausted or a quota is hit. A cut result is
    /// flagged, never silently shortened.
    pub fn apply<T>(&self, rows: impl IntoIterator<Item = T>, started: Instant) -> Limited<T> {
        let mut out = Vec::new();
        let mut truncated = false;
        for r in rows {
            if out.len() >= self.max_rows || started.elapsed() > self.timeout {
                truncated = true;
                break;
            }
            out.push(r);
        }
        Limited { rows: out, truncated }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Limited<T> {
    pub rows: Vec<T>,
    pub truncated: bool,
}

fn check_radius(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 && r <= MAX_ARCMIN {
        Ok(())
    } else {
        Err(Error::Domain(format!("radius {r} arcmin outside (0, {MAX_ARCMIN}]")))
    }
}

/// Deepest level whose nominal trixel edge is still at least `r`, capped at
/// the index depth. Covers there stay small in trixel count.
fn search_depth(r: f64, index_depth: u32) -> u32 {
    (0..=index_depth)
        .rev()
        .find(|&d| nominal_edge_arcmin(d) >= r)
        .unwrap_or(0)
}

/// Cap cover at the search depth, expressed at the catalog's index depth.
pub fn cap_ranges(cat: &Catalog, center: &UnitVector, r: f64) -> Result<HtmRangeSet> {
    let cap = Cap::new(*center, r)?;
    let d = search_depth(r, cat.index_depth());
    cover(&cap.into(), d, DEFAULT_COVER_BUDGET)?.to_depth(cat.index_depth())
}

fn position(cat: &Catalog, row: usize) -> UnitVector {
    let p = cat.photo();
    UnitVector {
        x: p.cx[row],
        y: p.cy[row],
        z: p.cz[row],
    }
}

fn by_distance(a: &NearbyHit, b: &NearbyHit) -> std::cmp::Ordering {
    a.distance.total_cmp(&b.distance).then(a.obj_id.cmp(&b.obj_id))
}

/// Rows within `r` of `center` with their hits, sorted by (distance, objID).
fn nearby_rows(cat: &Catalog, center: &UnitVector, r: f64) -> Result<Vec<(usize, NearbyHit)>> {
    check_radius(r)?;
    let mut out = Vec::new();
    for slice in cat.range_rows(&cap_ranges(cat, center, r)?)? {
        for row in slice {
            let distance = arc_angle(center, &position(cat, row));
            if distance <= r {
                let obj_id = cat.photo().obj_id[row];
                out.push((row, NearbyHit { obj_id, distance }));
            }
        }
    }
    out.sort_by(|a, b| by_distance(&a.1, &b.1));
    Ok(out)
}

/// Objects within `r` arcminutes of a unit vector.
pub fn nearby(cat: &Catalog, center: &UnitVector, r: f64) -> Result<Vec<NearbyHit>> {
    Ok(nearby_rows(cat, center, r)?.into_iter().map(|(_, h)| h).collect())
}

/// Objects within `r` arcminutes of (ra, dec), nearest first, ties by objID.
pub fn nearby_eq(cat: &Catalog, ra: f64, dec: f64, r: f64) -> Result<Vec<NearbyHit>> {
    nearby(cat, &EquatorialCoord::new(ra, dec)?.to_vec(), r)
}

pub fn nearest_eq(cat: &Catalog, ra: f64, dec: f64, r: f64) -> Result<Option<NearbyHit>> {
    Ok(nearby_eq(cat, ra, dec, r)?.into_iter().next())
}

/// Galaxies from primary detections, without saturated pixels, within `r`.
pub fn q1_unsaturated_galaxies(cat: &Catalog, ra: f64, dec: f64, r: f64) -> Result<Vec<NearbyHit>> {
    let saturated = cat.flag_mask("saturated")?;
    let p = cat.photo();
    let center = EquatorialCoord::new(ra, dec)?.to_vec();
    Ok(nearby_rows(cat, &center, r)?
        .into_iter()
        .filter(|&(row, _)| {
            cat.view_matches(View::Galaxy, p.flags[row], p.obj_type[row]) && p.flags[row] & saturated == 0
        })
        .map(|(_, h)| h)
        .collect())
}

/// Materializes every ordered pair within `radius` into the neighbors
/// table, sorted by (objID, neighborObjID). Returns the pair count.
pub fn build_neighbors(cat: &mut Catalog, radius: f64) -> Result<usize> {
    let pairs = neighbor_pairs(cat, radius)?;
    let stamp = cat.tick();
    let mut table = NeighborTable::default();
    for (a, b, distance) in &pairs {
        table.push(&NeighborPair {
            obj_id: *a,
            neighbor_obj_id: *b,
            distance: *distance,
            load_stamp: stamp,
        });
    }
    cat.replace_neighbors(table);
    Ok(pairs.len())
}

/// The pairs [`build_neighbors`] would store, without touching the catalog.
pub fn neighbor_pairs(cat: &Catalog, radius: f64) -> Result<Vec<(u64, u64, f64)>> {
    check_radius(radius)?;
    let n = cat.photo().len();
    let per_row: Vec<Vec<(u64, u64, f64)>> = (0..n)
        .into_par_iter()
        .map(|row| -> Result<Vec<(u64, u64, f64)>> {
            let me = cat.photo().obj_id[row];
            Ok(nearby_rows(cat, &position(cat, row), radius)?
                .into_iter()
                .filter(|&(other, _)| other != row)
                .map(|(_, h)| (me, h.obj_id, h.distance))
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut pairs: Vec<(u64, u64, f64)> = per_row.into_iter().flatten().collect();
    pairs.sort_by_key(|p| (p.0, p.1));
    Ok(pairs)
}

/// Objects moving fast but plausibly: `rowv² + colv²` in [50, 1000] with
/// both components non-negative.
pub fn q15_asteroids(cat: &Catalog) -> impl Iterator<Item = Asteroid> + '_ {
    let p = cat.photo();
    (0..p.len()).filter_map(move |i| {
        let (rv, cv) = (f64::from(p.rowv[i]), f64::from(p.colv[i]));
        let v2 = rv * rv + cv * cv;
        ((50.0..=1000.0).contains(&v2) && rv >= 0.0 && cv >= 0.0).then(|| Asteroid {
            obj_id: p.obj_id[i],
            velocity: v2.sqrt(),
        })
    })
}

/// Elongated detection, brightest in `band`, usable as one end of a streak.
fn streak_candidate(cat: &Catalog, row: usize, band: Band) -> bool {
    let p = cat.photo();
    let b = band.index();
    let f = |k: usize| f64::from(p.fiber_mag[k][row]);
    let (q, u) = (f64::from(p.q[b][row]), f64::from(p.u[b][row]));
    let (a, bb) = (f64::from(p.iso_a[b][row]), f64::from(p.iso_b[b][row]));
    let mag = f(b);
    q * q + u * u > 0.111111
        && (6.0..=22.0).contains(&mag)
        && (0..5).filter(|&k| k != b).all(|k| mag < f(k))
        && p.parent_id[row] == 0
        && a / bb > 1.5
        && a > 2.0
}

/// Red/green streak pairs in the same run and camcol, at most one field
/// apart, under 4 arcmin (chord measure) and within 2 mag of each other.
pub fn fast_movers(cat: &Catalog) -> Vec<MoverPair> {
    let p = cat.photo();
    let n = p.len();
    let reds: Vec<usize> = (0..n).filter(|&i| streak_candidate(cat, i, Band::R)).collect();
    let mut greens: HashMap<(i32, i32), HashMap<i32, Vec<usize>>> = HashMap::new();
    for i in (0..n).filter(|&i| streak_candidate(cat, i, Band::G)) {
        greens
            .entry((p.run[i], p.camcol[i]))
            .or_default()
            .entry(p.field[i])
            .or_default()
            .push(i);
    }
    let (r_band, g_band) = (Band::R.index(), Band::G.index());
    let mut out = Vec::new();
    for &r in &reds {
        let Some(by_field) = greens.get(&(p.run[r], p.camcol[r])) else {
            continue;
        };
        let rv = position(cat, r);
        let r_mag = f64::from(p.fiber_mag[r_band][r]);
        for df in -1..=1 {
            let Some(rows) = p.field[r].checked_add(df).and_then(|f| by_field.get(&f)) else {
                continue;
            };
            for &g in rows {
                if chord_arcmin(&rv, &position(cat, g)) < 4.0 && (r_mag - f64::from(p.fiber_mag[g_band][g])).abs() < 2.0
                {
                    out.push(MoverPair {
                        r_id: p.obj_id[r],
                        g_id: p.obj_id[g],
                    });
                }
            }
        }
    }
    out.sort_unstable();
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ScanStats {
    pub count: u64,
    pub rows_scanned: u64,
    pub bytes_scanned: u64,
    /// Seconds.
    pub elapsed: f64,
    pub rows_per_sec: f64,
    pub bytes_per_sec: f64,
}

impl ScanStats {
    pub(crate) fn new(count: u64, rows: u64, bytes: u64, elapsed: Duration) -> Self {
        let secs = elapsed.as_secs_f64().max(1e-9);
        Self {
            count,
            rows_scanned: rows,
            bytes_scanned: bytes,
            elapsed: secs,
            rows_per_sec: rows as f64 / secs,
            bytes_per_sec: bytes as f64 / secs,
        }
    }
}

/// Rows with `modelMag_r - modelMag_g` above `threshold`.
pub fn color_count_value(cat: &Catalog, threshold: f64) -> u64 {
    let p = cat.photo();
    let (r, g) = (&p.model_mag[Band::R.index()], &p.model_mag[Band::G.index()]);
    r.par_chunks(1 << 16)
        .zip(g.par_chunks(1 << 16))
        .map(|(r, g)| {
            r.iter()
                .zip(g)
                .filter(|&(&r, &g)| f64::from(r) - f64::from(g) > threshold)
                .count() as u64
        })
        .sum()
}

/// Full-scan color cut with throughput figures over the two columns read.
pub fn color_count(cat: &Catalog, threshold: f64) -> ScanStats {
    let started = Instant::now();
    let count = color_count_value(cat, threshold);
    let rows = cat.photo().len() as u64;
    ScanStats::new(count, rows, rows * 8, started.elapsed())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{BandValues, ObjType, PhotoObj};

    fn catalog_with(objs: &[PhotoObj]) -> Catalog {
        let mut cat = Catalog::new(20).unwrap();
        let rows: Vec<PhotoObj> = objs
            .iter()
            .cloned()
            .map(|mut o| {
                cat.derive_position(&mut o).unwrap();
                o
            })
            .collect();
        cat.append_photo(&rows);
        cat
    }

    fn at(id: u64, ra: f64, dec: f64) -> PhotoObj {
        PhotoObj {
            obj_id: id,
            ra,
            dec,
            ..Default::default()
        }
    }

    #[test]
    fn exact_position_and_empty() {
        let cat = catalog_with(&[at(7, 185.0, -0.5), at(8, 185.0, -0.48)]);
        let hits = nearby_eq(&cat, 185.0, -0.5, 1.0).unwrap();
        assert_eq!(
            hits[0],
            NearbyHit {
                obj_id: 7,
                distance: 0.0
            }
        );
        assert_eq!(hits.len(), 1);
        assert!(nearby_eq(&Catalog::default(), 185.0, -0.5, 1.0).unwrap().is_empty());
        assert!(nearby_eq(&cat, 185.0, -0.5, 0.0).is_err());
    }

    #[test]
    fn nearest_ordering_and_ties() {
        let cat = catalog_with(&[at(1, 10.0, 0.4 / 60.0), at(2, 10.0, 0.2 / 60.0)]);
        assert_eq!(nearest_eq(&cat, 10.0, 0.0, 1.0).unwrap().unwrap().obj_id, 2);
        assert!(nearest_eq(&cat, 10.0, 0.0, 0.1).unwrap().is_none());
        let tie = catalog_with(&[at(9, 10.0, 0.3 / 60.0), at(4, 10.0, -0.3 / 60.0)]);
        let hits = nearby_eq(&tie, 10.0, 0.0, 1.0).unwrap();
        assert_eq!(hits[0].distance, hits[1].distance);
        assert_eq!(hits[0].obj_id, 4);
    }

    #[test]
    fn neighbors_are_symmetric() {
        let mut cat = catalog_with(&[at(1, 50.0, 10.0), at(2, 50.0, 10.0 + 0.3 / 60.0), at(3, 52.0, 10.0)]);
        assert_eq!(build_neighbors(&mut cat, DEFAULT_NEIGHBOR_RADIUS).unwrap(), 2);
        let rows: Vec<(u64, u64)> = cat.neighbors().rows().map(|p| (p.obj_id, p.neighbor_obj_id)).collect();
        assert_eq!(rows, vec![(1, 2), (2, 1)]);
    }

    #[test]
    fn q15_examples() {
        let mk = |id, rowv, colv| PhotoObj {
            obj_id: id,
            rowv,
            colv,
            ..at(id, 1.0, 1.0)
        };
        let cat = catalog_with(&[mk(1, 10.0, 20.0), mk(2, 3.0, 4.0), mk(3, -5.0, 30.0)]);
        let got: Vec<Asteroid> = q15_asteroids(&cat).collect();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].obj_id, 1);
        assert!((got[0].velocity - 22.360679774997898).abs() < 1e-12);
    }

    fn streak(id: u64, band: usize, mag: f32, field: i32, dec: f64) -> PhotoObj {
        let mut bands = [BandValues {
            fiber_mag: mag + 1.0,
            iso_a: 1.0,
            iso_b: 1.0,
            ..Default::default()
        }; 5];
        bands[band] = BandValues {
            fiber_mag: mag,
            q: 0.4,
            u: 0.2,
            iso_a: 4.0,
            iso_b: 2.0,
            ..Default::default()
        };
        PhotoObj {
            run: 752,
            camcol: 3,
            field,
            bands,
            ..at(id, 120.0, dec)
        }
    }

    #[test]
    fn fast_mover_pair() {
        let red = streak(1, 2, 17.0, 40, 5.0);
        let green = streak(2, 1, 17.5, 41, 5.0 + 2.0 / 60.0);
        let cat = catalog_with(&[red.clone(), green.clone()]);
        assert_eq!(fast_movers(&cat), vec![MoverPair { r_id: 1, g_id: 2 }]);
        let moved = PhotoObj { camcol: 4, ..green };
        assert!(fast_movers(&catalog_with(&[red, moved])).is_empty());
    }

    #[test]
    fn color_cut() {
        let mk = |id, diff: f32| {
            let mut o = at(id, 3.0, 3.0);
            o.bands[1].model_mag = 18.0;
            o.bands[2].model_mag = 18.0 + diff;
            o
        };
        let cat = catalog_with(&[mk(1, 0.5), mk(2, 1.5), mk(3, 2.0)]);
        let s = color_count(&cat, 1.0);
        assert_eq!((s.count, s.rows_scanned), (2, 3));
        assert_eq!(color_count(&Catalog::default(), 1.0).count, 0);
    }

    #[test]
    fn q1_filters() {
        let cat = Catalog::new(20).unwrap();
        let good = cat.flags().mask_all(["primary", "ok_run"]).unwrap();
        let sat = cat.flag_mask("saturated").unwrap();
        let mut objs = Vec::new();
        for i in 0..6u64 {
            let mut o = at(i + 1, 185.0, -0.5 + i as f64 * 0.1 / 60.0);
            o.obj_type = if i == 5 { ObjType::Star } else { ObjType::Galaxy };
            o.flags = good | if i == 2 { sat } else { 0 };
            objs.push(o);
        }
        let cat = catalog_with(&objs);
        let ids: Vec<u64> = q1_unsaturated_galaxies(&cat, 185.0, -0.5, 1.0)
            .unwrap()
            .iter()
            .map(|h| h.obj_id)
            .collect();
        assert_eq!(ids, vec![1, 2, 4, 5]);
    }

    #[test]
    fn limits_flag_truncation() {
        let l = QueryLimits {
            max_rows: 3,
            ..Default::default()
        };
        let r = l.apply(0..10, Instant::now());
        assert_eq!((r.rows.len(), r.truncated), (3, true));
        let r = l.apply(0..3, Instant::now());
        assert!(!r.truncated);
    }
}

//! Seeded synthetic sky: photo objects, fields, plates and spectra with
//! documented distributions, written as loader-ready CSV files.
//!
//! Row roles are drawn per object: 11% secondary re-detections placed
//! 0.3 arcsec from an earlier object, 9% deblended parents (never primary),
//! and 80% primary detections, a quarter of which are deblended children of
//! an earlier parent. Magnitudes, shapes and velocities follow the
//! distributions in [`SynthParams`]. A few planted red/green streak pairs per
//! (run, camcol) group give the moving-object query something to find.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::catalog::{
    write_rows, BandValues, FieldRow, FlagDictionary, ObjType, PhotoObj, PlateRow, SpecLineRow, SpecObjRow,
};
use crate::error::{Error, Result};
use crate::sphere::{vec_to_eq, EquatorialCoord, UnitVector, ARCMIN_PER_RADIAN};

/// Object density, per square degree, at which a 0.5 arcmin neighborhood
/// holds on the order of ten objects.
pub const SDSS_DENSITY: f64 = 32_000.0;

const SQ_DEG_PER_SR: f64 = (180.0 / std::f64::consts::PI) * (180.0 / std::f64::consts::PI);

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DensityProfile {
    /// Area-uniform over the whole sphere.
    Uniform,
    /// Area-uniform inside a cap sized so the given density is reached.
    Patch { ra: f64, dec: f64, per_sq_deg: f64 },
}

impl DensityProfile {
    /// A survey-density patch around (185, -0.5).
    pub fn sdss() -> Self {
        DensityProfile::Patch {
            ra: 185.0,
            dec: -0.5,
            per_sq_deg: SDSS_DENSITY,
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "uniform" => Ok(DensityProfile::Uniform),
            "sdss" => Ok(DensityProfile::sdss()),
            _ => Err(Error::Config(format!(
                "unknown density profile {name:?} (expected uniform or sdss)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthParams {
    pub profile: DensityProfile,
    pub secondary_fraction: f64,
    pub parent_fraction: f64,
    /// Share of primaries that are deblended children.
    pub child_fraction: f64,
    pub ok_run_fraction: f64,
    pub saturated_fraction: f64,
    /// Objects per (run, camcol) group.
    pub group_size: usize,
    pub fields_per_group: usize,
    /// Planted red/green streak pairs per group.
    pub movers_per_group: usize,
    /// Share of objects with a spectrum.
    pub spectro_fraction: f64,
    pub lines_per_spectrum: usize,
    pub fibers_per_plate: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            profile: DensityProfile::Uniform,
            secondary_fraction: 0.11,
            parent_fraction: 0.09,
            child_fraction: 0.25,
            ok_run_fraction: 0.97,
            saturated_fraction: 0.05,
            group_size: 1000,
            fields_per_group: 10,
            movers_per_group: 2,
            spectro_fraction: 0.005,
            lines_per_spectrum: 10,
            fibers_per_plate: 600,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SyntheticSky {
    pub fields: Vec<FieldRow>,
    pub plates: Vec<PlateRow>,
    pub photo: Vec<PhotoObj>,
    pub spec_objs: Vec<SpecObjRow>,
    pub spec_lines: Vec<SpecLineRow>,
}

/// CSV file names written by [`SyntheticSky::write_csv`], in load order.
pub const CSV_FILES: [(&str, &str); 5] = [
    ("Field", "Field.csv"),
    ("Plate", "Plate.csv"),
    ("PhotoObj", "PhotoObj.csv"),
    ("SpecObj", "SpecObj.csv"),
    ("SpecLine", "SpecLine.csv"),
];

impl SyntheticSky {
    pub fn write_csv(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let open = |name: &str| {
            let p = dir.join(name);
            fs::File::create(&p)
                .map(std::io::BufWriter::new)
                .map_err(|e| Error::io(p, e))
        };
        write_rows(&self.fields, open(CSV_FILES[0].1)?)?;
        write_rows(&self.plates, open(CSV_FILES[1].1)?)?;
        write_rows(&self.photo, open(CSV_FILES[2].1)?)?;
        write_rows(&self.spec_objs, open(CSV_FILES[3].1)?)?;
        write_rows(&self.spec_lines, open(CSV_FILES[4].1)?)?;
        Ok(())
    }
}

/// Point at `dist_arcmin` from `center` along `bearing_deg` (0 = north, 90 = east).
pub fn offset_point(center: &UnitVector, dist_arcmin: f64, bearing_deg: f64) -> UnitVector {
    let pole = if center.z.abs() > 0.999_999 {
        UnitVector::X
    } else {
        UnitVector::Z
    };
    let east = pole.cross(center).unit();
    let north = center.cross(&east);
    let (d, b) = (dist_arcmin / ARCMIN_PER_RADIAN, bearing_deg.to_radians());
    let dir = north * b.cos() + east * b.sin();
    (*center * d.cos() + dir * d.sin()).unit()
}

/// Uniform point on the sphere.
pub fn random_unit_vector<R: Rng>(rng: &mut R) -> UnitVector {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).max(0.0).sqrt();
    UnitVector::normalize(r * phi.cos(), r * phi.sin(), z).expect("nonzero")
}

/// Area-uniform point within `radius_arcmin` of `center`.
pub fn random_in_cap<R: Rng>(rng: &mut R, center: &UnitVector, radius_arcmin: f64) -> UnitVector {
    let cos_r = (radius_arcmin / ARCMIN_PER_RADIAN).cos();
    let z: f64 = rng.random_range(cos_r..=1.0);
    let dist = z.clamp(-1.0, 1.0).acos() * ARCMIN_PER_RADIAN;
    offset_point(center, dist, rng.random_range(0.0..360.0))
}

fn to_radec(v: &UnitVector) -> (f64, f64) {
    let c = vec_to_eq(*v).expect("unit vector");
    (c.ra(), c.dec())
}

pub fn generate(n: usize, seed: u64) -> SyntheticSky {
    generate_with(n, seed, &SynthParams::default())
}

pub fn generate_with(n: usize, seed: u64, p: &SynthParams) -> SyntheticSky {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flags = FlagDictionary::default();
    let bit = |name: &str| flags.mask(name).expect("shipped flag");
    let mut sky = SyntheticSky::default();
    if n == 0 {
        return sky;
    }

    let groups = n.div_ceil(p.group_size.max(1));
    for g in 0..groups {
        for f in 0..p.fields_per_group.max(1) {
            sky.fields.push(FieldRow {
                field_id: (g * p.fields_per_group.max(1) + f + 1) as u64,
                run: 752 + (g / 6) as i32,
                camcol: (g % 6) as i32 + 1,
                field: 11 + f as i32,
                load_stamp: 0,
            });
        }
    }

    let (patch_center, patch_radius) = match p.profile {
        DensityProfile::Uniform => (None, 0.0),
        DensityProfile::Patch { ra, dec, per_sq_deg } => {
            let center = EquatorialCoord::new(ra, dec).expect("patch center").to_vec();
            let area_sr = (n as f64 / per_sq_deg) / SQ_DEG_PER_SR;
            let cos_r = (1.0 - area_sr / std::f64::consts::TAU).max(-1.0);
            (Some(center), cos_r.acos() * ARCMIN_PER_RADIAN)
        }
    };

    let color = |m: f64, s: f64| Normal::new(m, s).expect("valid normal");
    let (ug, gr, ri, iz) = (color(1.3, 0.4), color(0.4, 0.6), color(0.3, 0.2), color(0.2, 0.2));
    let shape = color(0.0, 0.15);
    let slow = color(0.0, 1.5);

    let mut positions: Vec<UnitVector> = Vec::with_capacity(n);
    let mut originals: Vec<usize> = Vec::new();
    let mut parents: Vec<usize> = Vec::new();
    let mut planted_partner: Option<usize> = None;

    for i in 0..n {
        let group = i / p.group_size.max(1);
        let fields_in_group = p.fields_per_group.max(1);
        let field_row = &sky.fields[group * fields_in_group + rng.random_range(0..fields_in_group)];

        let mut pos = match patch_center {
            Some(c) => random_in_cap(&mut rng, &c, patch_radius),
            None => random_unit_vector(&mut rng),
        };
        let mut obj_flags = 0u64;
        let mut parent_id = 0u64;
        let role: f64 = rng.random();
        let is_partner = planted_partner == Some(i);
        if !is_partner && role < p.secondary_fraction && !originals.is_empty() {
            let j = originals[rng.random_range(0..originals.len())];
            pos = offset_point(&positions[j], 0.3 / 60.0, rng.random_range(0.0..360.0));
            obj_flags |= bit("secondary");
        } else if !is_partner && role < p.secondary_fraction + p.parent_fraction {
            obj_flags |= bit("blended");
            parents.push(i);
            originals.push(i);
        } else {
            obj_flags |= bit("primary");
            if !is_partner && !parents.is_empty() && rng.random::<f64>() < p.child_fraction {
                let j = parents[rng.random_range(0..parents.len())];
                pos = offset_point(
                    &positions[j],
                    rng.random_range(0.0..3.0) / 60.0,
                    rng.random_range(0.0..360.0),
                );
                parent_id = j as u64 + 1;
                obj_flags |= bit("child");
            } else {
                originals.push(i);
            }
        }
        if rng.random::<f64>() < p.ok_run_fraction {
            obj_flags |= bit("ok_run");
        }
        if rng.random::<f64>() < p.saturated_fraction {
            obj_flags |= bit("saturated");
        }
        let kind: f64 = rng.random();
        let obj_type = if kind < 0.45 {
            ObjType::Star
        } else if kind < 0.90 {
            ObjType::Galaxy
        } else if kind < 0.95 {
            ObjType::Trail
        } else {
            ObjType::Defect
        };

        let r: f64 = rng.random_range(14.0..23.0);
        let g = r + gr.sample(&mut rng);
        let u = g + ug.sample(&mut rng);
        let ii = r - ri.sample(&mut rng);
        let z = ii - iz.sample(&mut rng);
        let mags = [u, g, r, ii, z];
        let mut bands = [BandValues::default(); 5];
        for (b, v) in bands.iter_mut().enumerate() {
            let iso_a: f64 = rng.random_range(1.0..8.0);
            *v = BandValues {
                model_mag: mags[b] as f32,
                model_mag_err: rng.random_range(0.01..0.2) as f32,
                fiber_mag: (mags[b] + rng.random_range(0.2..0.6)) as f32,
                q: shape.sample(&mut rng) as f32,
                u: shape.sample(&mut rng) as f32,
                iso_a: iso_a as f32,
                iso_b: (iso_a * rng.random_range(0.3..1.0)) as f32,
            };
        }
        let (rowv, colv) = if rng.random::<f64>() < 0.05 {
            (rng.random_range(-5.0..30.0), rng.random_range(-5.0..30.0))
        } else {
            (slow.sample(&mut rng), slow.sample(&mut rng))
        };

        let mut obj = PhotoObj {
            obj_id: i as u64 + 1,
            field_id: field_row.field_id,
            run: field_row.run,
            camcol: field_row.camcol,
            field: field_row.field,
            obj_type,
            flags: obj_flags,
            parent_id,
            rowv: rowv as f32,
            colv: colv as f32,
            bands,
            ..Default::default()
        };

        // plant a streak pair: this row red, the next one green and nearby
        let in_group = i % p.group_size.max(1);
        let plant_every = p.group_size.max(1) / (p.movers_per_group + 1).max(1);
        if is_partner {
            let red = &sky.photo[i - 1];
            let red_pos = positions[i - 1];
            pos = offset_point(&red_pos, rng.random_range(0.5..3.5), rng.random_range(0.0..360.0));
            obj.run = red.run;
            obj.camcol = red.camcol;
            let last = 11 + p.fields_per_group.max(1) as i32 - 1;
            let target_field = (red.field + rng.random_range(-1i32..=1)).clamp(11, last);
            let fr = sky
                .fields
                .iter()
                .find(|f| f.run == red.run && f.camcol == red.camcol && f.field == target_field)
                .expect("field exists");
            obj.field_id = fr.field_id;
            obj.field = fr.field;
            let red_mag = f64::from(red.bands[2].fiber_mag);
            make_streak(&mut obj, 1, red_mag + rng.random_range(-1.5..1.5), &mut rng);
            planted_partner = None;
        } else if p.movers_per_group > 0
            && plant_every > 0
            && in_group % plant_every == plant_every - 1
            && in_group + 1 < p.group_size
            && i + 1 < n
            && obj_flags & bit("primary") != 0
            && parent_id == 0
        {
            let mag = rng.random_range(14.0..20.0);
            make_streak(&mut obj, 2, mag, &mut rng);
            planted_partner = Some(i + 1);
        }

        let (ra, dec) = to_radec(&pos);
        obj.ra = ra;
        obj.dec = dec;
        positions.push(pos);
        sky.photo.push(obj);
    }

    let n_spec = (n as f64 * p.spectro_fraction).round() as usize;
    let n_plates = n_spec.div_ceil(p.fibers_per_plate.max(1));
    for k in 0..n_plates {
        sky.plates.push(PlateRow {
            plate_id: 266 + k as u64,
            load_stamp: 0,
        });
    }
    let mut line_id = 1u64;
    for s in 0..n_spec {
        let best = if rng.random::<f64>() < 0.9 {
            rng.random_range(1..=n as u64)
        } else {
            0
        };
        let spec_obj_id = s as u64 + 1;
        sky.spec_objs.push(SpecObjRow {
            spec_obj_id,
            plate_id: 266 + (s / p.fibers_per_plate.max(1)) as u64,
            best_obj_id: best,
            z: rng.random_range(0.0..0.4),
            load_stamp: 0,
        });
        for _ in 0..p.lines_per_spectrum {
            sky.spec_lines.push(SpecLineRow {
                line_id,
                spec_obj_id,
                wavelength: rng.random_range(3800.0..9200.0),
                ew: color(0.0, 5.0).sample(&mut rng),
                load_stamp: 0,
            });
            line_id += 1;
        }
    }
    sky
}

/// A hand-built field around (ra, dec): 22 objects within `r` arcmin of the
/// center, of which 19 are unsaturated primary galaxies. The other three are
/// a saturated galaxy, a star and a secondary galaxy detection. Six more
/// unsaturated primary galaxies lie just outside `r`.
pub fn q1_fixture(ra: f64, dec: f64, r: f64) -> Result<SyntheticSky> {
    let center = EquatorialCoord::new(ra, dec)?.to_vec();
    let flags = FlagDictionary::default();
    let good = flags.mask_all(["primary", "ok_run"])?;
    let mut sky = SyntheticSky {
        fields: vec![FieldRow {
            field_id: 1,
            run: 752,
            camcol: 1,
            field: 373,
            load_stamp: 0,
        }],
        ..Default::default()
    };
    let mut place = |k: usize, dist: f64, obj_type: ObjType, obj_flags: u64| {
        let (ra, dec) = to_radec(&offset_point(&center, dist, k as f64 * 137.5));
        sky.photo.push(PhotoObj {
            // ids deliberately out of distance order
            obj_id: 1000 + ((k * 11) % 28) as u64,
            field_id: 1,
            run: 752,
            camcol: 1,
            field: 373,
            ra,
            dec,
            obj_type,
            flags: obj_flags,
            ..Default::default()
        });
    };
    for k in 0..22 {
        let dist = r * (k as f64 + 0.5) / 22.5;
        let (t, f) = match k {
            4 => (ObjType::Galaxy, good | flags.mask("saturated")?),
            9 => (ObjType::Star, good),
            15 => (ObjType::Galaxy, flags.mask_all(["secondary", "ok_run"])?),
            _ => (ObjType::Galaxy, good),
        };
        place(k, dist, t, f);
    }
    for k in 22..28 {
        place(k, r * (1.02 + 0.1 * (k - 22) as f64), ObjType::Galaxy, good);
    }
    Ok(sky)
}

/// Shapes `o` as an elongated detection that is brightest in `band`.
fn make_streak<R: Rng>(o: &mut PhotoObj, band: usize, fiber_mag: f64, rng: &mut R) {
    let fiber_mag = fiber_mag.clamp(7.0, 21.0);
    for (b, v) in o.bands.iter_mut().enumerate() {
        v.fiber_mag = if b == band {
            fiber_mag as f32
        } else {
            (fiber_mag + rng.random_range(0.3..2.0)) as f32
        };
    }
    let v = &mut o.bands[band];
    let e: f64 = rng.random_range(0.4..0.7);
    let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    v.q = (e * theta.cos()) as f32;
    v.u = (e * theta.sin()) as f32;
    v.iso_a = rng.random_range(3.0..6.0) as f32;
    v.iso_b = (f64::from(v.iso_a) / rng.random_range(1.8..3.0)) as f32;
    o.parent_id = 0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::arc_angle;

    #[test]
    fn empty_sky() {
        let sky = generate(0, 1);
        assert!(sky.photo.is_empty() && sky.fields.is_empty() && sky.spec_objs.is_empty());
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate(500, 9);
        let b = generate(500, 9);
        assert_eq!(a.photo, b.photo);
        assert_ne!(a.photo, generate(500, 10).photo);
    }

    #[test]
    fn offset_point_distance() {
        for (ra, dec) in [(0.0, 0.0), (185.0, -0.5), (10.0, 89.99999), (0.0, -90.0)] {
            let c = EquatorialCoord::new(ra, dec).unwrap().to_vec();
            for d in [0.01, 1.0, 30.0, 600.0] {
                let p = offset_point(&c, d, 37.0);
                assert!((arc_angle(&c, &p) - d).abs() < 1e-7 * d.max(1.0), "{ra} {dec} {d}");
            }
        }
    }

    #[test]
    fn patch_stays_in_its_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = EquatorialCoord::new(185.0, -0.5).unwrap().to_vec();
        for _ in 0..1000 {
            assert!(arc_angle(&c, &random_in_cap(&mut rng, &c, 12.0)) <= 12.0 + 1e-9);
        }
    }

    #[test]
    fn profile_names() {
        assert_eq!(DensityProfile::parse("uniform").unwrap(), DensityProfile::Uniform);
        assert!(matches!(
            DensityProfile::parse("sdss").unwrap(),
            DensityProfile::Patch { .. }
        ));
        assert!(DensityProfile::parse("dense").is_err());
    }

    #[test]
    fn q1_fixture_shape() {
        let sky = q1_fixture(185.0, -0.5, 1.0).unwrap();
        let c = EquatorialCoord::new(185.0, -0.5).unwrap().to_vec();
        let inside = sky
            .photo
            .iter()
            .filter(|o| arc_angle(&c, &EquatorialCoord::new(o.ra, o.dec).unwrap().to_vec()) <= 1.0)
            .count();
        assert_eq!((sky.photo.len(), inside), (28, 22));
        let mut ids: Vec<u64> = sky.photo.iter().map(|o| o.obj_id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 28);
    }

    #[test]
    fn role_fractions() {
        let sky = generate(20_000, 4);
        let flags = FlagDictionary::default();
        let primary = flags.mask("primary").unwrap();
        let frac = sky.photo.iter().filter(|o| o.flags & primary != 0).count() as f64 / 20_000.0;
        assert!((frac - 0.80).abs() < 0.02, "{frac}");
        let parents = flags.mask("blended").unwrap();
        assert!(sky
            .photo
            .iter()
            .all(|o| o.flags & parents == 0 || o.flags & primary == 0));
        assert!(sky.photo.iter().any(|o| o.parent_id != 0));
    }
}

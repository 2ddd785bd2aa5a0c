//! Reference values computed with 50-digit arithmetic by an independent
//! implementation, frozen here.

#![allow(clippy::excessive_precision)]

type ArcCase = ((f64, f64), (f64, f64), f64);

use skycat::htm::{id_to_name, lookup_id, name_to_id, trixel_vertices};
use skycat::sphere::{arc_angle, EquatorialCoord};

fn at(ra: f64, dec: f64) -> skycat::sphere::UnitVector {
    EquatorialCoord::new(ra, dec).unwrap().to_vec()
}

// (ra, dec, depth, id, name); every point sits at least 6e-8 rad inside its trixel.
const LOOKUPS: [(f64, f64, u32, u64, &str); 20] = [
    (185.0, -0.5, 0, 10, "S2"),
    (185.0, -0.5, 5, 10242, "S200002"),
    (185.0, -0.5, 12, 167805653, "S2000020023111"),
    (185.0, -0.5, 20, 10997311301832, "S200002002311112203020"),
    (10.0, 89.9, 0, 15, "N3"),
    (10.0, 89.9, 5, 15616, "N310000"),
    (10.0, 89.9, 12, 255852571, "N3100000000123"),
    (10.0, 89.9, 20, 16767554119934, "N310000000012312203332"),
    (359.9, -45.0, 0, 11, "S3"),
    (359.9, -45.0, 5, 12032, "S330000"),
    (359.9, -45.0, 12, 197132303, "S3300000000033"),
    (359.9, -45.0, 20, 12919262658812, "S330000000003330003330"),
    (123.456, 12.345, 0, 14, "N2"),
    (123.456, 12.345, 5, 14936, "N221120"),
    (123.456, 12.345, 12, 244719819, "N2211202003023"),
    (123.456, 12.345, 20, 16037958073042, "N221120200302303223102"),
    (45.0, 30.0, 0, 15, "N3"),
    (45.0, 30.0, 5, 16375, "N333313"),
    (45.0, 30.0, 12, 268304143, "N3333133330033"),
    (45.0, 30.0, 20, 17583580380175, "N333313333003333300033"),
];

#[test]
fn lookup_ids_and_names() {
    for (ra, dec, depth, id, name) in LOOKUPS {
        let t = lookup_id(&at(ra, dec), depth).unwrap();
        assert_eq!(t.raw(), id, "({ra}, {dec}) at depth {depth}");
        assert_eq!(id_to_name(t), name);
        assert_eq!(name_to_id(name).unwrap(), t);
    }
}

#[test]
fn points_on_edges_land_in_a_containing_trixel() {
    for (ra, dec) in [(0.0, 1e-7), (270.0, -89.0), (90.0, 0.0), (0.0, 90.0)] {
        let p = at(ra, dec);
        for depth in [0, 5, 12, 20] {
            let t = lookup_id(&p, depth).unwrap();
            assert!(trixel_vertices(t).contains(&p), "({ra}, {dec}) depth {depth}");
        }
    }
}

#[test]
fn arc_distances() {
    let cases: [ArcCase; 5] = [
        ((185.0, -0.5), (185.0, -0.5 + 1.0 / 60.0), 0.99999999999999977796),
        ((0.0, 0.0), (180.0, 0.0), 10800.0),
        ((10.0, 10.0), (10.001, 10.001), 0.084210664242540486203),
        ((0.0, 89.0), (180.0, 89.0), 120.0),
        ((30.0, -20.0), (200.0, 45.0), 9219.8805826907682725),
    ];
    for ((ra1, d1), (ra2, d2), want) in cases {
        let got = arc_angle(&at(ra1, d1), &at(ra2, d2));
        let tol = 1e-10 * want.max(1.0);
        assert!((got - want).abs() <= tol, "{got} vs {want}");
    }
}

#[test]
fn base_and_child_areas() {
    let n0 = trixel_vertices(name_to_id("N0").unwrap());
    assert!((n0.area() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    let want = [
        0.3398369094541219371,
        0.3398369094541219371,
        0.3398369094541219371,
        0.55128559843253080794,
    ];
    for (c, w) in n0.subdivide().iter().zip(want) {
        assert!((c.area() - w).abs() < 1e-14, "{} vs {w}", c.area());
    }
}

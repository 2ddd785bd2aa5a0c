//! Equatorial coordinates, unit vectors and angular separation.
//!
//! Angles cross the public surface in degrees (positions) and arcminutes
//! (separations); all trigonometry happens in radians.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ARCMIN_PER_DEGREE: f64 = 60.0;
pub const ARCMIN_PER_RADIAN: f64 = 180.0 * 60.0 / std::f64::consts::PI;
/// Half a great circle.
pub const MAX_ARCMIN: f64 = 10_800.0;

/// Tolerance accepted by [`UnitVector::new`] on the squared norm.
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// A J2000 position: right ascension in `[0, 360)` and declination in
/// `[-90, 90]`, both in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquatorialCoord {
    ra: f64,
    dec: f64,
}

impl EquatorialCoord {
    /// Normalizes `ra` into `[0, 360)`; rejects a declination outside `[-90, 90]`.
    pub fn new(ra: f64, dec: f64) -> Result<Self> {
        if !ra.is_finite() || !dec.is_finite() {
            return Err(Error::Domain(format!("non-finite coordinate ({ra}, {dec})")));
        }
        if !(-90.0..=90.0).contains(&dec) {
            return Err(Error::Domain(format!("declination {dec} outside [-90, 90]")));
        }
        let mut ra = ra.rem_euclid(360.0);
        // rem_euclid can round up to exactly 360 for tiny negative inputs
        if ra >= 360.0 {
            ra = 0.0;
        }
        Ok(Self { ra, dec })
    }

    pub fn ra(&self) -> f64 {
        self.ra
    }

    pub fn dec(&self) -> f64 {
        self.dec
    }

    pub fn to_vec(&self) -> UnitVector {
        eq_to_vec(*self)
    }
}

/// A point on the unit sphere in Cartesian form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UnitVector {
    pub const X: UnitVector = UnitVector { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: UnitVector = UnitVector { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: UnitVector = UnitVector { x: 0.0, y: 0.0, z: 1.0 };

    /// Checked constructor; the components must already be unit length.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let n2 = x * x + y * y + z * z;
        if !n2.is_finite() || (n2 - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::Domain(format!(
                "({x}, {y}, {z}) is not a unit vector (|v|^2 = {n2})"
            )));
        }
        Ok(Self { x, y, z })
    }

    /// Scales an arbitrary nonzero vector onto the sphere.
    pub fn normalize(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Domain(format!("cannot normalize ({x}, {y}, {z})")));
        }
        Ok(Self {
            x: x / n,
            y: y / n,
            z: z / n,
        })
    }

    pub(crate) fn raw(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(&self, o: &UnitVector) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    /// Cross product; the result is generally not unit length.
    pub fn cross(&self, o: &UnitVector) -> UnitVector {
        UnitVector {
            x: self.y * o.z - self.z * o.y,
            y: self.z * o.x - self.x * o.z,
            z: self.x * o.y - self.y * o.x,
        }
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Rescales to unit length. Panics on the zero vector, which callers
    /// rule out before calling.
    pub(crate) fn unit(self) -> UnitVector {
        let n = self.norm();
        debug_assert!(n > 0.0);
        UnitVector {
            x: self.x / n,
            y: self.y / n,
            z: self.z / n,
        }
    }

    pub fn to_eq(&self) -> Result<EquatorialCoord> {
        vec_to_eq(*self)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Add for UnitVector {
    type Output = UnitVector;
    fn add(self, o: UnitVector) -> UnitVector {
        UnitVector::raw(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for UnitVector {
    type Output = UnitVector;
    fn sub(self, o: UnitVector) -> UnitVector {
        UnitVector::raw(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for UnitVector {
    type Output = UnitVector;
    fn neg(self) -> UnitVector {
        UnitVector::raw(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for UnitVector {
    type Output = UnitVector;
    fn mul(self, s: f64) -> UnitVector {
        UnitVector::raw(self.x * s, self.y * s, self.z * s)
    }
}

pub fn eq_to_vec(c: EquatorialCoord) -> UnitVector {
    let (ra, dec) = (c.ra.to_radians(), c.dec.to_radians());
    let cd = dec.cos();
    UnitVector {
        x: cd * ra.cos(),
        y: cd * ra.sin(),
        z: dec.sin(),
    }
}

/// Inverse of [`eq_to_vec`]. At the poles the right ascension is 0.
pub fn vec_to_eq(v: UnitVector) -> Result<EquatorialCoord> {
    let v = UnitVector::new(v.x, v.y, v.z)?;
    let rho = v.x.hypot(v.y);
    if rho == 0.0 {
        let dec = if v.z > 0.0 { 90.0 } else { -90.0 };
        return EquatorialCoord::new(0.0, dec);
    }
    // atan2 keeps accuracy near the poles where asin(z) does not
    let dec = v.z.atan2(rho).to_degrees();
    let ra = v.y.atan2(v.x).to_degrees();
    EquatorialCoord::new(ra, dec.clamp(-90.0, 90.0))
}

/// Great-circle separation in arcminutes, via the chord length.
pub fn arc_angle(a: &UnitVector, b: &UnitVector) -> f64 {
    let chord = (*a - *b).norm();
    let half = (chord / 2.0).min(1.0);
    2.0 * half.asin() * ARCMIN_PER_RADIAN
}

/// Chord length between two points expressed in arcminutes, as used by the
/// moving-object pair match (`acos(x) ~ x` near 1).
pub fn chord_arcmin(a: &UnitVector, b: &UnitVector) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    (dx * dx + dy * dy + dz * dz).sqrt() * ARCMIN_PER_RADIAN
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eq(ra: f64, dec: f64) -> UnitVector {
        EquatorialCoord::new(ra, dec).unwrap().to_vec()
    }

    #[test]
    fn axis_cases() {
        let v = eq(0.0, 0.0);
        assert!((v.x - 1.0).abs() < 1e-15 && v.y.abs() < 1e-15 && v.z.abs() < 1e-15);
        let v = eq(90.0, 0.0);
        assert!(v.x.abs() < 1e-15 && (v.y - 1.0).abs() < 1e-15 && v.z.abs() < 1e-15);
    }

    #[test]
    fn off_axis_value_matches_extended_precision() {
        // 40-digit evaluation of the trig formulas
        let v = eq(185.0, -0.5);
        assert!((v.x - -0.996_156_766_050_153_4).abs() < 1e-15);
        assert!((v.y - -0.087_152_424_124_034_47).abs() < 1e-15);
        assert!((v.z - -0.008_726_535_498_373_935).abs() < 1e-15);
    }

    #[test]
    fn ra_normalization_and_dec_domain() {
        assert_eq!(EquatorialCoord::new(-10.0, 0.0).unwrap().ra(), 350.0);
        assert_eq!(EquatorialCoord::new(720.0, 0.0).unwrap().ra(), 0.0);
        assert!(EquatorialCoord::new(-1e-300, 0.0).unwrap().ra() < 360.0);
        assert!(matches!(EquatorialCoord::new(0.0, 90.5), Err(Error::Domain(_))));
        assert!(matches!(EquatorialCoord::new(0.0, f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn inverse_examples() {
        let c = vec_to_eq(UnitVector::Z).unwrap();
        assert_eq!((c.ra(), c.dec()), (0.0, 90.0));
        let c = vec_to_eq(UnitVector::X).unwrap();
        assert_eq!((c.ra(), c.dec()), (0.0, 0.0));
        let v = UnitVector::normalize(-0.996156, -0.087128, -0.008727).unwrap();
        let c = vec_to_eq(v).unwrap();
        assert!((c.ra() - 185.0).abs() < 0.01, "{c:?}");
        assert!((c.dec() + 0.5).abs() < 0.01, "{c:?}");
        assert!(vec_to_eq(UnitVector::raw(1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn arc_angle_examples() {
        let a = eq(185.0, -0.5);
        assert_eq!(arc_angle(&a, &a), 0.0);
        let q = arc_angle(&eq(0.0, 0.0), &eq(90.0, 0.0));
        assert!((q - 5400.0).abs() < 1e-9);
        // spherical law of cosines at 40 digits
        let d = arc_angle(&a, &eq(185.01, -0.5));
        assert!((d - 0.599_977_153_838_444_8).abs() < 1e-9, "{d}");
        let anti = arc_angle(&UnitVector::X, &-UnitVector::X);
        assert!((anti - MAX_ARCMIN).abs() < 1e-9);
    }

    fn coord() -> impl Strategy<Value = (f64, f64)> {
        (0.0f64..360.0, -89.9f64..89.9)
    }

    proptest! {
        #[test]
        fn round_trip((ra, dec) in coord()) {
            let c = vec_to_eq(eq(ra, dec)).unwrap();
            let dra = (c.ra() - ra).abs();
            prop_assert!(dra.min(360.0 - dra) < 1e-9);
            prop_assert!((c.dec() - dec).abs() < 1e-9);
        }

        #[test]
        fn triangle_inequality(a in coord(), b in coord(), c in coord()) {
            let (a, b, c) = (eq(a.0, a.1), eq(b.0, b.1), eq(c.0, c.1));
            prop_assert!(arc_angle(&a, &c) <= arc_angle(&a, &b) + arc_angle(&b, &c) + 1e-9);
            prop_assert_eq!(arc_angle(&a, &b), arc_angle(&b, &a));
        }

        #[test]
        fn chord_form_agrees_with_acos(a in coord(), b in coord()) {
            let (a, b) = (eq(a.0, a.1), eq(b.0, b.1));
            let via_acos = a.dot(&b).clamp(-1.0, 1.0).acos() * ARCMIN_PER_RADIAN;
            prop_assume!(via_acos > 60.0 && via_acos < MAX_ARCMIN - 60.0);
            let d = arc_angle(&a, &b);
            prop_assert!(((d - via_acos) / via_acos).abs() < 1e-9);
        }
    }
}

//! Query regions and their trixel covers.
//!
//! A cover is a set of id ranges at a fixed index depth whose trixels
//! contain every point of the region. Covers are conservative: they may
//! include trixels that merely touch the region, never the reverse.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::htm::{base_trixels, edge_normal, Trixel, TrixelId, MAX_DEPTH};
use crate::sphere::{EquatorialCoord, UnitVector, ARCMIN_PER_RADIAN, MAX_ARCMIN};

/// Slack on region membership and classification dot products.
pub const REGION_EPS: f64 = 1e-12;

pub const DEFAULT_COVER_BUDGET: usize = 10_000;

/// Points within `radius` arcminutes of `axis`, boundary included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cap {
    axis: UnitVector,
    radius: f64,
    cos_radius: f64,
}

impl Cap {
    pub fn new(axis: UnitVector, radius_arcmin: f64) -> Result<Self> {
        if !(radius_arcmin > 0.0 && radius_arcmin <= MAX_ARCMIN) {
            return Err(Error::Domain(format!(
                "cap radius {radius_arcmin} arcmin outside (0, {MAX_ARCMIN}]"
            )));
        }
        let axis = UnitVector::new(axis.x, axis.y, axis.z)?;
        let cos_radius = if radius_arcmin == MAX_ARCMIN {
            -1.0
        } else {
            (radius_arcmin / ARCMIN_PER_RADIAN).cos()
        };
        Ok(Self {
            axis,
            radius: radius_arcmin,
            cos_radius,
        })
    }

    pub fn from_eq(ra: f64, dec: f64, radius_arcmin: f64) -> Result<Self> {
        Self::new(EquatorialCoord::new(ra, dec)?.to_vec(), radius_arcmin)
    }

    pub fn axis(&self) -> UnitVector {
        self.axis
    }

    pub fn radius_arcmin(&self) -> f64 {
        self.radius
    }

    pub fn contains(&self, p: &UnitVector) -> bool {
        self.axis.dot(p) >= self.cos_radius - REGION_EPS
    }

    pub fn classify(&self, t: &Trixel) -> Coverage {
        classify_halfspace(&self.axis, self.cos_radius, t)
    }
}

/// The closed halfspace `normal . p >= offset`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: UnitVector,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: UnitVector, offset: f64) -> Result<Self> {
        let normal = UnitVector::new(normal.x, normal.y, normal.z)?;
        if !(-1.0..=1.0).contains(&offset) {
            return Err(Error::Domain(format!("halfspace offset {offset} outside [-1, 1]")));
        }
        Ok(Self { normal, offset })
    }

    pub fn contains(&self, p: &UnitVector) -> bool {
        self.normal.dot(p) >= self.offset - REGION_EPS
    }

    /// Opening half-angle of the equivalent cap, in arcminutes.
    pub fn radius_arcmin(&self) -> f64 {
        self.offset.clamp(-1.0, 1.0).acos() * ARCMIN_PER_RADIAN
    }
}

/// Intersection of halfspaces. Convex polygons are the special case with
/// zero offsets; the region may turn out to be empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexRegion {
    constraints: Vec<Halfspace>,
}

impl ConvexRegion {
    pub fn new(constraints: Vec<Halfspace>) -> Result<Self> {
        if constraints.is_empty() {
            return Err(Error::Geometry("convex region needs at least one constraint".into()));
        }
        Ok(Self { constraints })
    }

    pub fn constraints(&self) -> &[Halfspace] {
        &self.constraints
    }

    pub fn contains(&self, p: &UnitVector) -> bool {
        self.constraints.iter().all(|h| h.contains(p))
    }

    /// Detects emptiness when two constraints describe disjoint caps. Other
    /// empty intersections go unnoticed here and yield an empty cover.
    pub fn is_trivially_empty(&self) -> bool {
        self.constraints.iter().enumerate().any(|(i, a)| {
            self.constraints[i + 1..].iter().any(|b| {
                let sep = a.normal.dot(&b.normal).clamp(-1.0, 1.0).acos() * ARCMIN_PER_RADIAN;
                sep > a.radius_arcmin() + b.radius_arcmin() + 1e-9
            })
        })
    }

    pub fn classify(&self, t: &Trixel) -> Coverage {
        let mut all_full = true;
        for h in &self.constraints {
            match classify_halfspace(&h.normal, h.offset, t) {
                Coverage::Disjoint => return Coverage::Disjoint,
                Coverage::Partial => all_full = false,
                Coverage::Full => {}
            }
        }
        if all_full {
            Coverage::Full
        } else {
            Coverage::Partial
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Cap(Cap),
    Convex(ConvexRegion),
}

impl Region {
    pub fn contains(&self, p: &UnitVector) -> bool {
        match self {
            Region::Cap(c) => c.contains(p),
            Region::Convex(c) => c.contains(p),
        }
    }

    pub fn classify(&self, t: &Trixel) -> Coverage {
        match self {
            Region::Cap(c) => c.classify(t),
            Region::Convex(c) => c.classify(t),
        }
    }
}

impl From<Cap> for Region {
    fn from(c: Cap) -> Self {
        Region::Cap(c)
    }
}

impl From<ConvexRegion> for Region {
    fn from(c: ConvexRegion) -> Self {
        Region::Convex(c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coverage {
    /// Every point of the trixel is inside the region.
    Full,
    /// Possibly some points inside.
    Partial,
    /// No point of the trixel is inside.
    Disjoint,
}

/// Builds a convex region from counterclockwise vertices, one zero-offset
/// constraint per edge.
pub fn polygon_region(points: &[EquatorialCoord]) -> Result<ConvexRegion> {
    if points.len() < 3 {
        return Err(Error::Geometry(format!(
            "polygon needs at least 3 vertices, got {}",
            points.len()
        )));
    }
    let verts: Vec<UnitVector> = points.iter().map(EquatorialCoord::to_vec).collect();
    let n = verts.len();
    let mut constraints = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (verts[i], verts[(i + 1) % n]);
        let cross = a.cross(&b);
        if cross.norm() < 1e-12 {
            return Err(Error::Geometry(format!(
                "edge {i} (vertex {i} to {}) is degenerate",
                (i + 1) % n
            )));
        }
        let normal = cross.unit();
        for (j, v) in verts.iter().enumerate() {
            if j == i || j == (i + 1) % n {
                continue;
            }
            let side = normal.dot(v);
            if side.abs() <= 1e-12 {
                return Err(Error::Geometry(format!("vertex {j} is collinear with edge {i}")));
            }
            if side < 0.0 {
                return Err(Error::Geometry(format!(
                    "edge {i} has vertex {j} on its right: polygon is not convex or not counterclockwise"
                )));
            }
        }
        constraints.push(Halfspace { normal, offset: 0.0 });
    }
    ConvexRegion::new(constraints)
}

/// Classifies a trixel against `axis . p >= cos_radius`.
fn classify_halfspace(axis: &UnitVector, cos_radius: f64, t: &Trixel) -> Coverage {
    if cos_radius <= -1.0 {
        return Coverage::Full;
    }
    if cos_radius >= 0.0 {
        return classify_small_cap(axis, cos_radius, t);
    }
    // Larger than a hemisphere: classify the complement, shrunk by a hair so
    // that a Full complement means strictly outside.
    match classify_small_cap(&-*axis, -cos_radius + 2.0 * REGION_EPS, t) {
        Coverage::Full => Coverage::Disjoint,
        Coverage::Disjoint => Coverage::Full,
        Coverage::Partial => Coverage::Partial,
    }
}

/// Caps of at most a hemisphere are geodesically convex, so three corners
/// inside certify the whole trixel.
fn classify_small_cap(axis: &UnitVector, cos_radius: f64, t: &Trixel) -> Coverage {
    let threshold = cos_radius - REGION_EPS;
    let corners = t.corners();
    let inside = corners.iter().filter(|c| axis.dot(c) >= threshold).count();
    if inside == 3 {
        return Coverage::Full;
    }
    if inside > 0 {
        return Coverage::Partial;
    }
    if t.containment_margin(axis) >= -REGION_EPS {
        return Coverage::Partial;
    }
    let edges = [(0, 1), (1, 2), (2, 0)];
    if edges
        .iter()
        .any(|&(i, j)| edge_reaches(axis, threshold, &corners[i], &corners[j]))
    {
        return Coverage::Partial;
    }
    Coverage::Disjoint
}

/// Whether the minor arc `p -> q` has a point with `axis . x >= threshold`,
/// given that neither endpoint does.
fn edge_reaches(axis: &UnitVector, threshold: f64, p: &UnitVector, q: &UnitVector) -> bool {
    let n = edge_normal(p, q);
    let d = axis.dot(&n);
    // the closest point of the great circle to the axis has dot sqrt(1 - d^2)
    let m = (1.0 - d * d).max(0.0).sqrt();
    if m < threshold {
        return false;
    }
    if m < 1e-12 {
        return true;
    }
    let c = (*axis - n * d) * (1.0 / m);
    p.cross(&c).dot(&n) >= -REGION_EPS && c.cross(q).dot(&n) >= -REGION_EPS
}

/// Sorted, merged id ranges at one index depth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HtmRangeSet {
    index_depth: u32,
    ranges: Vec<(u64, u64)>,
}

impl HtmRangeSet {
    pub fn empty(index_depth: u32) -> Self {
        Self {
            index_depth,
            ranges: Vec::new(),
        }
    }

    /// Every id at `index_depth`.
    pub fn full_sky(index_depth: u32) -> Self {
        Self {
            index_depth,
            ranges: vec![TrixelId::depth_bounds(index_depth)],
        }
    }

    /// Normalizes arbitrary inclusive ranges: sorts, then merges overlapping
    /// and adjacent ones.
    pub fn from_ranges(index_depth: u32, mut ranges: Vec<(u64, u64)>) -> Result<Self> {
        if index_depth > MAX_DEPTH {
            return Err(Error::DepthLimit {
                depth: index_depth,
                max: MAX_DEPTH,
            });
        }
        let (min, max) = TrixelId::depth_bounds(index_depth);
        if let Some(&(lo, hi)) = ranges.iter().find(|&&(lo, hi)| lo > hi || lo < min || hi > max) {
            return Err(Error::Config(format!(
                "range ({lo}, {hi}) is not valid at depth {index_depth}"
            )));
        }
        ranges.sort_unstable();
        let mut merged: Vec<(u64, u64)> = Vec::with_capacity(ranges.len());
        for (lo, hi) in ranges {
            match merged.last_mut() {
                Some(last) if lo <= last.1.saturating_add(1) => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        Ok(Self {
            index_depth,
            ranges: merged,
        })
    }

    pub fn index_depth(&self) -> u32 {
        self.index_depth
    }

    pub fn ranges(&self) -> &[(u64, u64)] {
        &self.ranges
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn contains(&self, id: u64) -> bool {
        let i = self.ranges.partition_point(|&(_, hi)| hi < id);
        self.ranges.get(i).is_some_and(|&(lo, _)| lo <= id)
    }

    /// Number of index-depth ids covered.
    pub fn id_count(&self) -> u64 {
        self.ranges.iter().map(|&(lo, hi)| hi - lo + 1).sum()
    }

    /// The same cover expressed at a deeper index depth.
    pub fn to_depth(&self, index_depth: u32) -> Result<HtmRangeSet> {
        if index_depth < self.index_depth || index_depth > MAX_DEPTH {
            return Err(Error::Config(format!(
                "cannot re-express depth {} ranges at depth {index_depth}",
                self.index_depth
            )));
        }
        let shift = 2 * (index_depth - self.index_depth);
        let ranges = self
            .ranges
            .iter()
            .map(|&(lo, hi)| (lo << shift, ((hi + 1) << shift) - 1))
            .collect();
        Ok(HtmRangeSet { index_depth, ranges })
    }

    /// Splits the ranges into the fewest aligned trixels (of any depth up to
    /// the index depth) with the same union.
    pub fn trixels(&self) -> Vec<TrixelId> {
        let mut out = Vec::new();
        for &(lo, hi) in &self.ranges {
            let mut cur = lo;
            while cur <= hi {
                let mut level = 0u32;
                while level < self.index_depth {
                    let size = 1u64 << (2 * (level + 1));
                    if cur % size != 0 || cur + size - 1 > hi {
                        break;
                    }
                    level += 1;
                }
                out.push(TrixelId::new_unchecked(cur >> (2 * level)));
                cur += 1u64 << (2 * level);
            }
        }
        out
    }

    /// Total solid angle of the covered trixels in steradians.
    pub fn solid_angle(&self) -> f64 {
        self.trixels()
            .iter()
            .map(|&t| crate::htm::trixel_vertices(t).area())
            .sum()
    }
}

/// Trixels selected by a cover before conversion to ranges.
#[derive(Clone, Debug, Default)]
pub struct CoverDetail {
    /// Trixels wholly inside the region.
    pub full: Vec<TrixelId>,
    /// Boundary trixels emitted at the index depth or when the budget ran out.
    pub partial: Vec<TrixelId>,
}

/// Covers `region` with id ranges at `index_depth`.
///
/// Descends breadth-first from the octahedron faces. When refining the next
/// level would push the number of emitted trixels past `budget`, the
/// remaining boundary trixels are emitted whole.
pub fn cover(region: &Region, index_depth: u32, budget: usize) -> Result<HtmRangeSet> {
    let detail = cover_detail(region, index_depth, budget)?;
    let ranges = detail
        .full
        .iter()
        .chain(&detail.partial)
        .map(|t| t.index_range(index_depth))
        .collect::<Result<Vec<_>>>()?;
    HtmRangeSet::from_ranges(index_depth, ranges)
}

pub fn cover_detail(region: &Region, index_depth: u32, budget: usize) -> Result<CoverDetail> {
    if index_depth > MAX_DEPTH {
        return Err(Error::DepthLimit {
            depth: index_depth,
            max: MAX_DEPTH,
        });
    }
    if budget < 8 {
        return Err(Error::Config(format!("cover budget {budget} is below 8")));
    }
    let mut detail = CoverDetail::default();
    let mut frontier: Vec<(TrixelId, Trixel)> = base_trixels().to_vec();
    let mut depth = 0;
    loop {
        let mut boundary = Vec::new();
        for (id, tri) in frontier {
            match region.classify(&tri) {
                Coverage::Full => detail.full.push(id),
                Coverage::Partial => boundary.push((id, tri)),
                Coverage::Disjoint => {}
            }
        }
        let emitted = detail.full.len() + detail.partial.len();
        if depth == index_depth || emitted + 4 * boundary.len() > budget {
            detail.partial.extend(boundary.into_iter().map(|(id, _)| id));
            return Ok(detail);
        }
        frontier = Vec::with_capacity(4 * boundary.len());
        for (id, tri) in boundary {
            let ids = id.children()?;
            frontier.extend(ids.into_iter().zip(tri.subdivide()));
        }
        depth += 1;
    }
}

//! Planar points, half-planes and convex polygons.
//!
//! Polygons are immutable values with counterclockwise vertex order. All
//! integral quantities (area, centroid, polar second moment) are evaluated in
//! closed form by fan triangulation, relative to a local origin to keep the
//! cancellation error proportional to the polygon size rather than its
//! distance from the coordinate origin.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometric tolerance in scaled-domain length units.
///
/// Used for vertex deduplication, convexity slack and empty-cell detection.
pub const TOL_GEOM: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    #[inline]
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    /// Counterclockwise rotation about the origin.
    pub fn rotate(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Point {
    #[inline]
    fn add_assign(&mut self, rhs: Point) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    #[inline]
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Div<f64> for Point {
    type Output = Point;
    #[inline]
    fn div(self, s: f64) -> Point {
        Point::new(self.x / s, self.y / s)
    }
}

impl Neg for Point {
    type Output = Point;
    #[inline]
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// The closed half-plane `{x : normal·x <= offset}` with a unit normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlane {
    normal: Point,
    offset: f64,
}

impl HalfPlane {
    /// Builds a half-plane from an already normalized normal.
    pub fn new(normal: Point, offset: f64) -> Result<Self> {
        if !normal.is_finite() || !offset.is_finite() || (normal.norm() - 1.0).abs() > TOL_GEOM {
            return Err(Error::InvalidArgument(format!(
                "half-plane normal must be a finite unit vector, got ({}, {})",
                normal.x, normal.y
            )));
        }
        Ok(Self { normal, offset })
    }

    /// Builds `{x : n·x <= c}` for an arbitrary nonzero `n`, rescaling both sides.
    pub fn from_unnormalized(n: Point, c: f64) -> Result<Self> {
        let len = n.norm();
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::InvalidArgument("half-plane normal is zero".into()));
        }
        Self::new(n / len, c / len)
    }

    pub(crate) fn new_unchecked(normal: Point, offset: f64) -> Self {
        Self { normal, offset }
    }

    pub fn normal(&self) -> Point {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Positive outside, negative inside.
    #[inline]
    pub fn signed_distance(&self, p: Point) -> f64 {
        self.normal.dot(p) - self.offset
    }

    pub fn contains(&self, p: Point) -> bool {
        self.signed_distance(p) <= 0.0
    }

    pub fn complement(&self) -> HalfPlane {
        HalfPlane { normal: -self.normal, offset: -self.offset }
    }

    pub fn translate(&self, t: Point) -> HalfPlane {
        HalfPlane { normal: self.normal, offset: self.offset + self.normal.dot(t) }
    }
}

/// A convex polygon with counterclockwise vertices and positive area.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl TryFrom<Vec<Point>> for ConvexPolygon {
    type Error = Error;
    fn try_from(v: Vec<Point>) -> Result<Self> {
        ConvexPolygon::new(v)
    }
}

impl From<ConvexPolygon> for Vec<Point> {
    fn from(p: ConvexPolygon) -> Self {
        p.vertices
    }
}

impl ConvexPolygon {
    /// Validates and builds a polygon. Vertices closer than [`TOL_GEOM`] to
    /// their predecessor are merged before the checks run.
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidPolygon("non-finite vertex".into()));
        }
        let vertices = dedup_cyclic(vertices);
        if vertices.len() < 3 {
            return Err(Error::InvalidPolygon(format!(
                "need at least 3 distinct vertices, got {}",
                vertices.len()
            )));
        }
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if (b - a).cross(c - b) < -TOL_GEOM {
                return Err(Error::InvalidPolygon(format!(
                    "vertex {} makes a clockwise turn (polygon must be convex and counterclockwise)",
                    (i + 1) % n
                )));
            }
        }
        let poly = Self { vertices };
        if poly.area() <= TOL_GEOM {
            return Err(Error::InvalidPolygon("polygon area is not positive".into()));
        }
        Ok(poly)
    }

    pub(crate) fn from_vertices_unchecked(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    /// Axis-aligned rectangle `[x0, x0 + w] × [y0, y0 + h]`.
    pub fn rectangle(origin: Point, width: f64, height: f64) -> Result<Self> {
        Self::new(vec![
            origin,
            origin + Point::new(width, 0.0),
            origin + Point::new(width, height),
            origin + Point::new(0.0, height),
        ])
    }

    pub fn unit_square() -> Self {
        Self::from_vertices_unchecked(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ])
    }

    /// Regular `n`-gon of the given area centered at `center`; the first
    /// vertex sits at angle `rotation` from the +x axis.
    pub fn regular(n: usize, area: f64, center: Point, rotation: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!("regular polygon needs n >= 3, got {n}")));
        }
        if !(area > 0.0) || !area.is_finite() {
            return Err(Error::InvalidArgument(format!("area must be positive, got {area}")));
        }
        let nf = n as f64;
        // area = (n/2) R^2 sin(2π/n)
        let r = (2.0 * area / (nf * (2.0 * PI / nf).sin())).sqrt();
        let vertices = (0..n)
            .map(|k| {
                let t = rotation + 2.0 * PI * k as f64 / nf;
                center + Point::new(r * t.cos(), r * t.sin())
            })
            .collect();
        Self::new(vertices)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edges as `(start, end)` pairs in counterclockwise order.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        let o = self.vertices[0];
        let mut twice = 0.0;
        for (p, q) in self.edges() {
            twice += (p - o).cross(q - o);
        }
        0.5 * twice
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(p, q)| p.dist(q)).sum()
    }

    pub fn centroid(&self) -> Point {
        let o = self.vertices[0];
        let mut twice_area = 0.0;
        let mut acc = Point::default();
        for (p, q) in self.edges() {
            let a = p - o;
            let b = q - o;
            let c = a.cross(b);
            twice_area += c;
            acc += (a + b) * c;
        }
        o + acc / (3.0 * twice_area)
    }

    /// `∫_P |x - reference|² dx`, exact up to rounding.
    pub fn second_moment(&self, reference: Point) -> f64 {
        let mut acc = 0.0;
        for (p, q) in self.edges() {
            let a = p - reference;
            let b = q - reference;
            acc += a.cross(b) * (a.norm_sq() + a.dot(b) + b.norm_sq());
        }
        acc / 12.0
    }

    /// Minimum over `ξ` of `∫_P |x - ξ|² dx`; attained at the centroid.
    pub fn min_second_moment(&self) -> (Point, f64) {
        let c = self.centroid();
        (c, self.second_moment(c))
    }

    /// Largest vertex-to-vertex distance, by rotating calipers.
    pub fn diameter(&self) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        if n <= 3 {
            let mut best: f64 = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    best = best.max(v[i].dist(v[j]));
                }
            }
            return best;
        }
        let twice_area = |a: Point, b: Point, c: Point| (b - a).cross(c - a).abs();
        let mut best: f64 = 0.0;
        let mut j = 1;
        for i in 0..n {
            let ni = (i + 1) % n;
            while twice_area(v[i], v[ni], v[(j + 1) % n]) > twice_area(v[i], v[ni], v[j]) {
                j = (j + 1) % n;
            }
            best = best.max(v[i].dist(v[j])).max(v[ni].dist(v[j]));
        }
        best
    }

    /// Number of edges longer than [`TOL_GEOM`].
    pub fn edge_count(&self) -> usize {
        self.edges().filter(|(p, q)| p.dist(*q) > TOL_GEOM).count()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.edges().all(|(a, b)| (b - a).cross(p - a) >= 0.0)
    }

    /// Signed distance from `p` to the boundary, positive inside.
    pub fn depth(&self, p: Point) -> f64 {
        self.edges()
            .map(|(a, b)| (b - a).cross(p - a) / a.dist(b))
            .fold(f64::INFINITY, f64::min)
    }

    /// The half-planes whose intersection is this polygon, one per edge.
    pub fn half_planes(&self) -> Vec<HalfPlane> {
        self.edges()
            .map(|(a, b)| {
                let e = b - a;
                let n = Point::new(e.y, -e.x) / e.norm();
                HalfPlane::new_unchecked(n, n.dot(a))
            })
            .collect()
    }

    pub fn translate(&self, t: Point) -> ConvexPolygon {
        Self::from_vertices_unchecked(self.vertices.iter().map(|&p| p + t).collect())
    }

    /// Uniform scaling about the origin; `s` must be positive.
    pub fn scale(&self, s: f64) -> ConvexPolygon {
        Self::from_vertices_unchecked(self.vertices.iter().map(|&p| p * s).collect())
    }

    pub fn rotate(&self, angle: f64) -> ConvexPolygon {
        Self::from_vertices_unchecked(self.vertices.iter().map(|&p| p.rotate(angle)).collect())
    }

    /// Anisotropic scaling about the origin, `(x, y) ↦ (sx·x, sy·y)`.
    pub fn stretch(&self, sx: f64, sy: f64) -> ConvexPolygon {
        Self::from_vertices_unchecked(
            self.vertices.iter().map(|&p| Point::new(sx * p.x, sy * p.y)).collect(),
        )
    }

    /// `self ∩ h`, or `None` when the intersection has area below [`TOL_GEOM`].
    pub fn clip(&self, h: &HalfPlane) -> Option<ConvexPolygon> {
        let labels = vec![(); self.vertices.len()];
        let (v, _) = clip_labeled(&self.vertices, &labels, h, ())?;
        Some(Self::from_vertices_unchecked(v))
    }

    /// Intersection with another convex polygon.
    pub fn intersect(&self, other: &ConvexPolygon) -> Option<ConvexPolygon> {
        let mut cur = self.clone();
        for h in other.half_planes() {
            cur = cur.clip(&h)?;
        }
        Some(cur)
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }
}

/// Removes vertices within [`TOL_GEOM`] of their cyclic predecessor.
fn dedup_cyclic(mut v: Vec<Point>) -> Vec<Point> {
    v.dedup_by(|b, a| a.dist(*b) <= TOL_GEOM);
    while v.len() > 1 && v[0].dist(v[v.len() - 1]) <= TOL_GEOM {
        v.pop();
    }
    v
}

/// Sutherland–Hodgman clipping of a convex polygon that carries one label per
/// edge (`labels[k]` belongs to the edge `verts[k] → verts[k+1]`). The new
/// edge created along the clip line receives `new_label`.
///
/// Returns `None` when the result has fewer than three vertices or area below
/// [`TOL_GEOM`].
pub(crate) fn clip_labeled<L: Copy>(
    verts: &[Point],
    labels: &[L],
    h: &HalfPlane,
    new_label: L,
) -> Option<(Vec<Point>, Vec<L>)> {
    let n = verts.len();
    let dist: Vec<f64> = verts.iter().map(|&p| h.signed_distance(p)).collect();
    if dist.iter().all(|&d| d <= 0.0) {
        return Some((verts.to_vec(), labels.to_vec()));
    }
    if dist.iter().all(|&d| d > 0.0) {
        return None;
    }
    let mut out_v = Vec::with_capacity(n + 1);
    let mut out_l = Vec::with_capacity(n + 1);
    for k in 0..n {
        let kn = (k + 1) % n;
        let (p, q) = (verts[k], verts[kn]);
        let (dp, dq) = (dist[k], dist[kn]);
        let p_in = dp <= 0.0;
        let q_in = dq <= 0.0;
        if p_in {
            out_v.push(p);
            out_l.push(labels[k]);
            if !q_in {
                let t = dp / (dp - dq);
                out_v.push(p + (q - p) * t);
                out_l.push(new_label);
            }
        } else if q_in {
            let t = dp / (dp - dq);
            out_v.push(p + (q - p) * t);
            out_l.push(labels[k]);
        }
    }
    // Merge near-coincident vertices; the surviving vertex keeps the label of
    // the non-degenerate edge that leaves it.
    let mut i = 0;
    while out_v.len() >= 2 && i < out_v.len() {
        let j = (i + 1) % out_v.len();
        if out_v[i].dist(out_v[j]) <= TOL_GEOM {
            out_l[i] = out_l[j];
            out_v.remove(j);
            out_l.remove(j);
            if j < i {
                i -= 1;
            }
        } else {
            i += 1;
        }
    }
    if out_v.len() < 3 {
        return None;
    }
    let o = out_v[0];
    let mut twice = 0.0;
    for k in 0..out_v.len() {
        let a = out_v[k] - o;
        let b = out_v[(k + 1) % out_v.len()] - o;
        twice += a.cross(b);
    }
    if 0.5 * twice <= TOL_GEOM {
        return None;
    }
    Some((out_v, out_l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn unit_hexagon() -> ConvexPolygon {
        ConvexPolygon::regular(6, 1.0, Point::default(), 0.0).unwrap()
    }

    #[test]
    fn clip_axis_aligned() {
        let sq = ConvexPolygon::unit_square();
        let h = HalfPlane::new(Point::new(1.0, 0.0), 0.5).unwrap();
        let half = sq.clip(&h).unwrap();
        assert!(approx(half.area(), 0.5, 1e-15));
        let (lo, hi) = half.bounding_box();
        assert_eq!((lo.x, lo.y, hi.x, hi.y), (0.0, 0.0, 0.5, 1.0));

        let loose = HalfPlane::new(Point::new(1.0, 0.0), 2.0).unwrap();
        assert_eq!(sq.clip(&loose).unwrap(), sq);

        let infeasible = HalfPlane::new(Point::new(1.0, 0.0), -1.0).unwrap();
        assert!(sq.clip(&infeasible).is_none());
    }

    #[test]
    fn sliver_is_empty() {
        let sq = ConvexPolygon::unit_square();
        let h = HalfPlane::new(Point::new(1.0, 0.0), 1e-12).unwrap();
        assert!(sq.clip(&h).is_none());
    }

    #[test]
    fn area_examples() {
        assert!(approx(ConvexPolygon::unit_square().area(), 1.0, 1e-15));
        let s = 2f64.sqrt() * 3f64.powf(-0.75);
        let hex = ConvexPolygon::regular(6, 1.0, Point::default(), 0.0).unwrap();
        // circumradius of a regular hexagon equals its side
        assert!(approx(hex.vertices()[0].norm(), s, 1e-14));
        assert!(approx(1.5 * 3f64.sqrt() * s * s, 1.0, 1e-14));
        assert!(approx(hex.area(), 1.0, 1e-14));
        let tri = ConvexPolygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        assert!(approx(tri.area(), 0.5, 1e-15));
    }

    #[test]
    fn centroid_examples() {
        let c = ConvexPolygon::unit_square().centroid();
        assert!(approx(c.x, 0.5, 1e-15) && approx(c.y, 0.5, 1e-15));
        let tri = ConvexPolygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        let c = tri.centroid();
        assert!(approx(c.x, 1.0 / 3.0, 1e-15) && approx(c.y, 1.0 / 3.0, 1e-15));
        let t = Point::new(3.5, -7.25);
        let moved = tri.translate(t).centroid();
        assert!(approx(moved.x, c.x + t.x, 1e-14) && approx(moved.y, c.y + t.y, 1e-14));
    }

    #[test]
    fn second_moment_examples() {
        let sq = ConvexPolygon::unit_square();
        let center = Point::new(0.5, 0.5);
        let oracle = quadrature::polygon_second_moment(&sq, center, 1e-13);
        assert!(approx(oracle, 1.0 / 6.0, 1e-12));
        assert!(approx(sq.second_moment(center), oracle, 1e-14));
        assert!(approx(sq.second_moment(Point::new(0.0, 0.0)), 2.0 / 3.0, 1e-15));

        let c6 = 5.0 * 3f64.sqrt() / 54.0;
        assert!(approx(unit_hexagon().second_moment(Point::default()), c6, 1e-15));
        assert!(approx(c6, 0.160375, 5e-7));
    }

    #[test]
    fn min_second_moment_of_regular_polygons() {
        for n in 3..=12 {
            let nf = n as f64;
            let t = PI / nf;
            let cn = (t.tan() / 3.0 + 1.0 / t.tan()) / (2.0 * nf);
            let poly = ConvexPolygon::regular(n, 1.0, Point::new(0.3, -1.1), 0.4).unwrap();
            let (c, val) = poly.min_second_moment();
            assert!(c.dist(Point::new(0.3, -1.1)) < 1e-13, "n={n}");
            assert!(approx(val, cn, 1e-14), "n={n}: {val} vs {cn}");
        }
        let sq = ConvexPolygon::unit_square();
        let (c, v) = sq.min_second_moment();
        assert!(c.dist(Point::new(0.5, 0.5)) < 1e-15);
        assert!(approx(v, 1.0 / 6.0, 1e-15));
        assert!(approx(sq.scale(2.5).min_second_moment().1, v * 2.5f64.powi(4), 1e-13));
    }

    #[test]
    fn diameter_and_edges() {
        let sq = ConvexPolygon::unit_square();
        assert!(approx(sq.diameter(), 2f64.sqrt(), 1e-15));
        assert_eq!(sq.edge_count(), 4);
        let hex = unit_hexagon();
        assert!(approx(hex.diameter(), 2f64.powf(1.5) * 3f64.powf(-0.75), 1e-14));
        assert!(approx(hex.diameter(), 1.2408, 1e-4));
        assert_eq!(hex.edge_count(), 6);
        let penta = ConvexPolygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0 - 1e-12, 1.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        assert_eq!(penta.edge_count(), 4);
    }

    #[test]
    fn rejects_bad_polygons() {
        let cw = vec![Point::new(0.0, 0.0), Point::new(0.0, 1.0), Point::new(1.0, 0.0)];
        assert!(ConvexPolygon::new(cw).is_err());
        let two = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)];
        assert!(ConvexPolygon::new(two).is_err());
        let nonconvex = vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(1.0, 0.2),
            Point::new(2.0, 2.0),
            Point::new(0.0, 2.0),
        ];
        assert!(ConvexPolygon::new(nonconvex).is_err());
        assert!(HalfPlane::new(Point::new(2.0, 0.0), 1.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        /// Random convex polygon: sorted random angles on a jittered ellipse.
        fn arb_polygon() -> impl Strategy<Value = ConvexPolygon> {
            (
                prop::collection::vec(0.0..1.0f64, 3..12),
                0.2..3.0f64,
                0.2..3.0f64,
                -5.0..5.0f64,
                -5.0..5.0f64,
                0.0..PI,
            )
                .prop_filter_map("degenerate", |(mut ts, a, b, cx, cy, rot)| {
                    ts.sort_by(|x, y| x.partial_cmp(y).unwrap());
                    let v: Vec<Point> = ts
                        .iter()
                        .map(|t| {
                            let th = 2.0 * PI * t;
                            Point::new(cx, cy) + Point::new(a * th.cos(), b * th.sin()).rotate(rot)
                        })
                        .collect();
                    ConvexPolygon::new(v).ok().filter(|p| p.area() > 1e-3)
                })
        }

        proptest! {
            #[test]
            fn parallel_axis(p in arb_polygon(), rx in -4.0..4.0f64, ry in -4.0..4.0f64) {
                let r = Point::new(rx, ry);
                let c = p.centroid();
                let lhs = p.second_moment(r);
                let rhs = p.second_moment(c) + p.area() * (r - c).norm_sq();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
            }

            #[test]
            fn complementary_clips_partition_area(
                p in arb_polygon(), nx in -1.0..1.0f64, ny in -1.0..1.0f64, off in -3.0..3.0f64
            ) {
                prop_assume!(nx.hypot(ny) > 1e-3);
                let h = HalfPlane::from_unnormalized(Point::new(nx, ny), off).unwrap();
                let a = p.clip(&h).map_or(0.0, |q| q.area());
                let b = p.clip(&h.complement()).map_or(0.0, |q| q.area());
                prop_assert!(a <= p.area() * (1.0 + 1e-14));
                // slivers under TOL_GEOM are dropped by contract
                prop_assert!(((a + b) - p.area()).abs() <= 1e-12 * p.area() + 2.0 * TOL_GEOM);
            }

            #[test]
            fn regular_polygon_lower_bound(p in arb_polygon()) {
                let n = p.edge_count();
                let t = PI / n as f64;
                let cn = (t.tan() / 3.0 + 1.0 / t.tan()) / (2.0 * n as f64);
                let a = p.area();
                prop_assert!(p.min_second_moment().1 >= cn * a * a * (1.0 - 1e-12));
            }

            #[test]
            fn rigid_motion_invariance(p in arb_polygon(), th in 0.0..(2.0 * PI), tx in -3.0..3.0f64, ty in -3.0..3.0f64) {
                let t = Point::new(tx, ty);
                let q = p.rotate(th).translate(t);
                prop_assert!((q.area() - p.area()).abs() < 1e-10);
                prop_assert!((q.min_second_moment().1 - p.min_second_moment().1).abs() < 1e-10);
                prop_assert!((q.diameter() - p.diameter()).abs() < 1e-10);
                prop_assert_eq!(q.edge_count(), p.edge_count());
                let c = p.centroid().rotate(th) + t;
                prop_assert!(q.centroid().dist(c) < 1e-10);
            }

            #[test]
            fn calipers_match_brute_force(p in arb_polygon()) {
                let v = p.vertices();
                let mut best: f64 = 0.0;
                for i in 0..v.len() { for j in 0..v.len() { best = best.max(v[i].dist(v[j])); } }
                prop_assert!((p.diameter() - best).abs() < 1e-12);
            }

            #[test]
            fn centroid_is_interior(p in arb_polygon()) {
                prop_assert!(p.depth(p.centroid()) > 0.0);
            }
        }
    }
}

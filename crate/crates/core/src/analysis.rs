//! Crystallization diagnostics: edge-count audit, per-cell hexagon
//! closeness, triangular-lattice fitting and neighbor statistics.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{self, EnergyReport};
use crate::error::{Error, Result};
use crate::geometry::{ConvexPolygon, Point, TOL_GEOM};
use crate::tessellation::{adjacency_graph, CellPartition, DomainSpec};

/// Default relative band for good neighbor distances.
pub const DEFAULT_TAU: f64 = 0.05;

/// The unit-density triangular lattice, rotated by `theta` and translated by
/// `translation`, optionally scaled by `scale` (spacing `scale·a`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangularLattice {
    pub theta: f64,
    pub translation: Point,
    pub scale: f64,
}

impl Default for TriangularLattice {
    fn default() -> Self {
        Self { theta: 0.0, translation: Point::default(), scale: 1.0 }
    }
}

impl TriangularLattice {
    pub fn new(theta: f64, translation: Point) -> Self {
        Self { theta, translation, scale: 1.0 }
    }

    /// `12^{-1/4}·[[2, 1], [0, √3]]`, columns are the basis vectors.
    pub fn generator() -> [[f64; 2]; 2] {
        let s = 12f64.powf(-0.25);
        [[2.0 * s, s], [0.0, 3f64.sqrt() * s]]
    }

    pub fn spacing(&self) -> f64 {
        self.scale * energy::lattice_spacing()
    }

    /// Lattice point with integer coordinates `(i, j)`.
    pub fn point(&self, i: i64, j: i64) -> Point {
        let g = Self::generator();
        let (i, j) = (i as f64, j as f64);
        let local = Point::new(g[0][0] * i + g[0][1] * j, g[1][0] * i + g[1][1] * j) * self.scale;
        self.translation + local.rotate(self.theta)
    }

    /// Real lattice coordinates of `p`.
    fn coords(&self, p: Point) -> (f64, f64) {
        let g = Self::generator();
        let q = (p - self.translation).rotate(-self.theta) / self.scale;
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        ((g[1][1] * q.x - g[0][1] * q.y) / det, (-g[1][0] * q.x + g[0][0] * q.y) / det)
    }

    /// Nearest lattice point to `p`.
    pub fn nearest(&self, p: Point) -> Point {
        let (u, v) = self.coords(p);
        let (i0, j0) = (u.round() as i64, v.round() as i64);
        let mut best = self.point(i0, j0);
        for di in -1..=1 {
            for dj in -1..=1 {
                let c = self.point(i0 + di, j0 + dj);
                if c.dist(p) < best.dist(p) {
                    best = c;
                }
            }
        }
        best
    }

    /// All lattice points within the box `[lo, hi]` grown by `margin`.
    pub fn points_in_box(&self, lo: Point, hi: Point, margin: f64) -> Vec<Point> {
        let (lo, hi) = (lo - Point::new(margin, margin), hi + Point::new(margin, margin));
        let corners = [lo, Point::new(hi.x, lo.y), hi, Point::new(lo.x, hi.y)];
        let (mut umin, mut umax, mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for c in corners {
            let (u, v) = self.coords(c);
            umin = umin.min(u);
            umax = umax.max(u);
            vmin = vmin.min(v);
            vmax = vmax.max(v);
        }
        let mut out = Vec::new();
        for i in umin.floor() as i64 - 1..=umax.ceil() as i64 + 1 {
            for j in vmin.floor() as i64 - 1..=vmax.ceil() as i64 + 1 {
                let p = self.point(i, j);
                if p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y {
                    out.push(p);
                }
            }
        }
        out
    }

    /// Voronoi cell of the lattice point `z`, a regular hexagon of area `scale²`.
    pub fn cell(&self, z: Point) -> ConvexPolygon {
        ConvexPolygon::regular(6, self.scale * self.scale, z, self.theta + PI / 6.0)
            .expect("regular hexagon is valid")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerCheck {
    pub avg_edges: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Average number of edges per nonempty cell against `6 - (6 - S)/n`
/// (exactly 6 on the torus). Cell vertices are those of the partition as a
/// planar graph: a neighbor's corner lying inside one of the cell's edges
/// splits that edge.
pub fn euler_check(partition: &CellPartition, domain: &DomainSpec) -> EulerCheck {
    let graph = adjacency_graph(partition);
    let counts: Vec<usize> = (0..partition.len())
        .into_par_iter()
        .filter_map(|i| {
            let cell = partition.cell(i)?;
            let mut extra_points: Vec<Point> = Vec::new();
            for e in &graph.neighbors[i] {
                let Some(nc) = partition.cell(e.neighbor) else { continue };
                let shift = partition.image_position(e.neighbor, e.image) - partition.sites()[e.neighbor];
                extra_points.extend(nc.vertices().iter().map(|&v| v + shift));
            }
            if partition.periods().is_none() {
                if let Some(poly) = domain.scaled_polygon() {
                    extra_points.extend_from_slice(poly.vertices());
                }
            }
            let mut count = cell.edge_count();
            for (p, q) in cell.edges() {
                let len = p.dist(q);
                if len <= TOL_GEOM {
                    continue;
                }
                let dir = (q - p) / len;
                let mut inner: Vec<f64> = extra_points
                    .iter()
                    .filter_map(|&x| {
                        let t = (x - p).dot(dir);
                        let off = (x - p).cross(dir).abs();
                        (off <= 1e-7 && t > 1e-7 && t < len - 1e-7).then_some(t)
                    })
                    .collect();
                inner.sort_by(f64::total_cmp);
                inner.dedup_by(|a, b| (*a - *b).abs() <= 1e-7);
                count += inner.len();
            }
            Some(count)
        })
        .collect();
    let n = counts.len();
    let avg = counts.iter().sum::<usize>() as f64 / n.max(1) as f64;
    let bound = match domain.side_count() {
        Some(s) => 6.0 - (6.0 - s as f64) / n.max(1) as f64,
        None => 6.0,
    };
    EulerCheck { avg_edges: avg, bound, pass: avg <= bound + 1e-12 }
}

/// Deviation of a cell from the unit-area regular hexagon: the largest
/// relative error of the centroid-to-vertex and centroid-to-side distances
/// after rescaling to unit area. Infinite for cells that are not hexagons.
pub fn hexagon_closeness(cell: &ConvexPolygon) -> f64 {
    let verts: Vec<Point> = {
        let v = cell.vertices();
        (0..v.len()).filter(|&k| v[k].dist(v[(k + 1) % v.len()]) > TOL_GEOM).map(|k| v[k]).collect()
    };
    if verts.len() != 6 {
        return f64::INFINITY;
    }
    let s = 1.0 / cell.area().sqrt();
    let c = cell.centroid();
    let r = energy::hexagon_circumradius();
    let h = energy::hexagon_apothem();
    let mut eps: f64 = 0.0;
    for k in 0..6 {
        let p = verts[k];
        let q = verts[(k + 1) % 6];
        eps = eps.max(((p - c).norm() * s / r - 1.0).abs());
        let side = ((q - p).cross(c - p) / (q - p).norm()).abs();
        eps = eps.max((side * s / h - 1.0).abs());
    }
    eps
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeFit {
    /// Rotation in `[0, π/3)`.
    pub theta: f64,
    pub translation: Point,
    pub rms: f64,
    /// Length of the mean sixfold bond orientation vector, in `[0, 1]`.
    pub order: f64,
}

impl LatticeFit {
    pub fn lattice(&self) -> TriangularLattice {
        TriangularLattice::new(self.theta, self.translation)
    }
}

/// Fits a rotated, translated copy of the unit-density triangular lattice.
///
/// The rotation comes from the mean of `exp(6iφ)` over nearest-neighbor bond
/// angles `φ`; the translation snaps the point nearest the cloud's center
/// onto the lattice and is then refined by the mean residual.
pub fn lattice_fit(points: &[Point]) -> Result<LatticeFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 points, got {}", points.len())));
    }
    let n = points.len();
    let bonds: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut d: Vec<(f64, Point)> =
                (0..n).filter(|&j| j != i).map(|j| (points[i].dist(points[j]), points[j] - points[i])).collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0));
            d.truncate(6);
            let dmin = d[0].0;
            d.into_iter().filter(move |(r, _)| *r <= 1.2 * dmin).map(|(_, v)| {
                let phi = 6.0 * v.y.atan2(v.x);
                (phi.cos(), phi.sin())
            })
        })
        .collect();
    let m = bonds.len() as f64;
    let (cx, cy) = bonds.iter().fold((0.0, 0.0), |acc, b| (acc.0 + b.0, acc.1 + b.1));
    let order = (cx * cx + cy * cy).sqrt() / m;
    if order < 0.5 {
        return Err(Error::DegenerateFit(format!("bond orientations have no dominant mode (order {order:.3})")));
    }
    let theta = cy.atan2(cx).rem_euclid(2.0 * PI) / 6.0;
    let center = points.iter().fold(Point::default(), |a, &p| a + p) / n as f64;
    let anchor = *points.iter().min_by(|a, b| a.dist(center).total_cmp(&b.dist(center))).unwrap();
    let mut lattice = TriangularLattice::new(theta, anchor);
    // rigid least-squares refinement against the current nearest-point matching
    for _ in 0..4 {
        let q: Vec<Point> = points.iter().map(|&p| lattice.nearest(p)).collect();
        let pm = points.iter().fold(Point::default(), |a, &p| a + p) / n as f64;
        let qm = q.iter().fold(Point::default(), |a, &p| a + p) / n as f64;
        let (mut cross, mut dot) = (0.0, 0.0);
        for (&p, &q) in points.iter().zip(&q) {
            let (u, w) = (q - qm, p - pm);
            cross += u.x * w.y - u.y * w.x;
            dot += u.x * w.x + u.y * w.y;
        }
        let delta = cross.atan2(dot);
        lattice.theta += delta;
        lattice.translation = (lattice.translation - qm).rotate(delta) + pm;
    }
    let theta = lattice.theta.rem_euclid(PI / 3.0);
    let rms = (points.iter().map(|&p| (p - lattice.nearest(p)).norm_sq()).sum::<f64>() / n as f64).sqrt();
    // reduce the translation into the fundamental cell around the origin
    let t = lattice.translation;
    let t = t - TriangularLattice::new(theta, Point::default()).nearest(t);
    Ok(LatticeFit { theta, translation: t, rms, order })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Largest `|d/a - 1|` over bonds between cells not touching the boundary.
    pub max_interior_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub defect: f64,
    pub tau: f64,
    /// Per cell; infinite when the cell is not a hexagon (`null` in JSON).
    #[serde(with = "infinite_as_null")]
    pub hexagon_eps: Vec<f64>,
    pub good: Vec<bool>,
    /// Fraction of points that are not good.
    pub fraction_defective: f64,
    /// The same among points whose cell does not touch the boundary.
    pub fraction_defective_interior: f64,
    /// Fraction of cells with hexagon deviation above `tau`.
    pub fraction_not_hexagonal: f64,
    /// Fraction of defective points whose cell touches the boundary.
    pub defective_on_boundary: f64,
    /// Neighbor distances relative to the lattice spacing `a`.
    pub neighbor_distance: NeighborStats,
    /// Smallest `δ` such that removing at most `δ·n` points leaves only points
    /// with six neighbors, all at distance within `(1 ± δ)·a`.
    pub lattice_distance: f64,
    pub avg_edges: f64,
    pub euler_bound: f64,
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|x| x.is_finite().then_some(*x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let v = Vec::<Option<f64>>::deserialize(d)?;
        Ok(v.into_iter().map(|x| x.unwrap_or(f64::INFINITY)).collect())
    }
}

/// Neighbor and shape diagnostics of an optimal partition. A point is good
/// when it has exactly six neighbors, all at distance within `(1 ± tau)·a`.
pub fn stability_report(
    domain: &DomainSpec,
    partition: &CellPartition,
    energy: &EnergyReport,
    tau: f64,
) -> StabilityReport {
    let a = energy::lattice_spacing();
    let graph = adjacency_graph(partition);
    let flags = partition.boundary_flags();
    let n = partition.len();
    let hexagon_eps: Vec<f64> =
        partition.cells().iter().map(|c| c.as_ref().map_or(f64::INFINITY, hexagon_closeness)).collect();
    let good: Vec<bool> = (0..n)
        .map(|i| {
            let nb = &graph.neighbors[i];
            nb.len() == 6 && nb.iter().all(|e| (e.distance / a - 1.0).abs() <= tau)
        })
        .collect();
    let defective = good.iter().filter(|g| !**g).count();
    let interior = flags.iter().filter(|f| !**f).count();
    let defective_interior = (0..n).filter(|&i| !good[i] && !flags[i]).count();
    let defective_boundary = (0..n).filter(|&i| !good[i] && flags[i]).count();
    let mut min = f64::INFINITY;
    let mut max: f64 = 0.0;
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut interior_dev: f64 = 0.0;
    for e in graph.neighbors.iter().flatten() {
        let r = e.distance / a;
        min = min.min(r);
        max = max.max(r);
        sum += r;
        count += 1;
        if !flags[e.site] && !flags[e.neighbor] {
            interior_dev = interior_dev.max((r - 1.0).abs());
        }
    }
    let point_dev: Vec<f64> = graph
        .neighbors
        .iter()
        .map(|nb| {
            if nb.len() == 6 {
                nb.iter().map(|e| (e.distance / a - 1.0).abs()).fold(0.0, f64::max)
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let euler = euler_check(partition, domain);
    StabilityReport {
        lattice_distance: lattice_distance(&point_dev),
        defect: energy.defect,
        tau,
        fraction_not_hexagonal: hexagon_eps.iter().filter(|e| **e > tau).count() as f64 / n as f64,
        hexagon_eps,
        good,
        fraction_defective: defective as f64 / n as f64,
        fraction_defective_interior: if interior == 0 { 0.0 } else { defective_interior as f64 / interior as f64 },
        defective_on_boundary: if defective == 0 { 0.0 } else { defective_boundary as f64 / defective as f64 },
        neighbor_distance: NeighborStats {
            min: if count == 0 { 0.0 } else { min },
            max,
            mean: if count == 0 { 0.0 } else { sum / count as f64 },
            max_interior_deviation: interior_dev,
        },
        avg_edges: euler.avg_edges,
        euler_bound: euler.bound,
    }
}

/// `min_k max(k/n, s_(n-k))` over the ascending per-point deviations `s`:
/// the cost of dropping the `k` worst points against what the rest deviate by.
pub fn lattice_distance(point_dev: &[f64]) -> f64 {
    let n = point_dev.len();
    if n == 0 {
        return 0.0;
    }
    let mut s = point_dev.to_vec();
    s.sort_by(f64::total_cmp);
    (0..=n)
        .map(|k| {
            let rest = if k == n { 0.0 } else { s[n - 1 - k] };
            rest.max(k as f64 / n as f64)
        })
        .fold(f64::INFINITY, f64::min)
}

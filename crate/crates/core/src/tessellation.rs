//! Power diagrams (Laguerre tessellations) of weighted sites, clipped to a
//! convex polygonal domain or built on a flat torus.
//!
//! The cell of site `i` is
//! `{x : |x - z_i|² + ℓ_i <= |x - z_j|² + ℓ_j for all j}` intersected with the
//! domain. Each cell is produced independently by clipping the domain with
//! one half-plane per competing site, nearest sites first, stopping as soon
//! as no farther site can cut the current cell.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy;
use crate::error::{Error, Result};
use crate::geometry::{clip_labeled, ConvexPolygon, HalfPlane, Point, TOL_GEOM};

/// Cells are built in parallel once the site count reaches this size.
const PARALLEL_THRESHOLD: usize = 64;

/// Base domain before scaling: a unit-area convex polygon or the unit-area
/// torus `ℝ²/(γℤ × γ⁻¹ℤ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseDomain {
    Polygon(ConvexPolygon),
    Torus { gamma: f64 },
}

/// The scaled domain `Ω_λ = V_λ^{1/2} Ω`.
#[derive(Clone, Debug, PartialEq)]
pub enum ScaledDomain {
    Polygon(ConvexPolygon),
    Torus { width: f64, height: f64 },
}

/// A base domain together with the parameter `λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    base: BaseDomain,
    lambda: f64,
    v_lambda: f64,
    scaled: ScaledDomain,
}

impl DomainSpec {
    /// `base` must have unit area (±1e-9).
    pub fn polygon(base: ConvexPolygon, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        let area = base.area();
        if (area - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDomain(format!("base polygon area must be 1, got {area}")));
        }
        let v = energy::v_lambda(lambda);
        let scaled = base.scale(v.sqrt());
        Ok(Self { base: BaseDomain::Polygon(base), lambda, v_lambda: v, scaled: ScaledDomain::Polygon(scaled) })
    }

    pub fn torus(gamma: f64, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidDomain(format!("torus aspect must be positive, got {gamma}")));
        }
        let v = energy::v_lambda(lambda);
        let s = v.sqrt();
        Ok(Self {
            base: BaseDomain::Torus { gamma },
            lambda,
            v_lambda: v,
            scaled: ScaledDomain::Torus { width: s * gamma, height: s / gamma },
        })
    }

    /// Torus whose scaled periods are `cols·a` by `rows·a√3`, holding exactly
    /// `2·cols·rows` points of the unit-density triangular lattice.
    pub fn commensurate_torus(cols: usize, rows: usize) -> Result<Self> {
        if cols == 0 || rows == 0 {
            return Err(Error::InvalidDomain("commensurate torus needs cols, rows >= 1".into()));
        }
        let a = energy::lattice_spacing();
        let width = cols as f64 * a;
        let height = rows as f64 * a * 3f64.sqrt();
        let v = width * height;
        let lambda = energy::lambda_for_volume(v);
        let gamma = width / v.sqrt();
        let mut d = Self::torus(gamma, lambda)?;
        // pin the periods exactly rather than through the λ round trip
        d.v_lambda = v;
        d.scaled = ScaledDomain::Torus { width, height };
        Ok(d)
    }

    pub fn base(&self) -> &BaseDomain {
        &self.base
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn v_lambda(&self) -> f64 {
        self.v_lambda
    }

    pub fn scaled(&self) -> &ScaledDomain {
        &self.scaled
    }

    pub fn is_torus(&self) -> bool {
        matches!(self.scaled, ScaledDomain::Torus { .. })
    }

    pub fn scaled_polygon(&self) -> Option<&ConvexPolygon> {
        match &self.scaled {
            ScaledDomain::Polygon(p) => Some(p),
            ScaledDomain::Torus { .. } => None,
        }
    }

    pub fn periods(&self) -> Option<(f64, f64)> {
        match self.scaled {
            ScaledDomain::Torus { width, height } => Some((width, height)),
            ScaledDomain::Polygon(_) => None,
        }
    }

    /// Area of the scaled domain.
    pub fn area(&self) -> f64 {
        match &self.scaled {
            ScaledDomain::Polygon(p) => p.area(),
            ScaledDomain::Torus { width, height } => width * height,
        }
    }

    /// `𝓗¹(∂Ω_λ)`; zero for the torus.
    pub fn boundary_length(&self) -> f64 {
        match &self.scaled {
            ScaledDomain::Polygon(p) => p.perimeter(),
            ScaledDomain::Torus { .. } => 0.0,
        }
    }

    /// Number of sides of the domain polygon; `None` for the torus.
    pub fn side_count(&self) -> Option<usize> {
        self.scaled_polygon().map(ConvexPolygon::edge_count)
    }

    /// Bounding box of the scaled domain (fundamental rectangle for the torus).
    pub fn bounding_box(&self) -> (Point, Point) {
        match &self.scaled {
            ScaledDomain::Polygon(p) => p.bounding_box(),
            ScaledDomain::Torus { width, height } => (Point::default(), Point::new(*width, *height)),
        }
    }

    /// Whether `p` lies in the domain, with [`TOL_GEOM`] slack. Every point is
    /// in the torus.
    pub fn contains(&self, p: Point) -> bool {
        match &self.scaled {
            ScaledDomain::Polygon(poly) => poly.depth(p) >= -TOL_GEOM,
            ScaledDomain::Torus { .. } => p.is_finite(),
        }
    }

    /// Reduces a point into the fundamental rectangle (identity for polygons).
    pub fn wrap(&self, p: Point) -> Point {
        match self.scaled {
            ScaledDomain::Torus { width, height } => Point::new(wrap_coord(p.x, width), wrap_coord(p.y, height)),
            ScaledDomain::Polygon(_) => p,
        }
    }

    /// `b - a`, using the minimum image on the torus.
    pub fn displacement(&self, a: Point, b: Point) -> Point {
        let d = b - a;
        match self.scaled {
            ScaledDomain::Torus { width, height } => {
                Point::new(d.x - width * (d.x / width).round(), d.y - height * (d.y / height).round())
            }
            ScaledDomain::Polygon(_) => d,
        }
    }
}

fn wrap_coord(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    if r >= period {
        0.0
    } else {
        r
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidDomain(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

/// Sites with additive weights `ℓ_i`, normalized so that `min ℓ = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedSites {
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl WeightedSites {
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidSites("at least one site is required".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidSites(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidSites(format!("site {i} is not finite")));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::InvalidSites(format!("weight {i} is not finite")));
        }
        let lmin = weights.iter().copied().fold(f64::INFINITY, f64::min);
        let weights = weights.into_iter().map(|w| w - lmin).collect();
        Ok(Self { points, weights })
    }

    pub fn unweighted(points: Vec<Point>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![0.0; n])
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Period offset of a neighbor image, in multiples of the torus periods.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Image {
    pub i: i32,
    pub j: i32,
}

impl Image {
    pub const ZERO: Image = Image { i: 0, j: 0 };
}

impl std::ops::Neg for Image {
    type Output = Image;

    fn neg(self) -> Image {
        Image { i: -self.i, j: -self.j }
    }
}

/// What produced a cell edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeSource {
    /// Edge `k` of the domain polygon (or of the bounding box on the torus).
    Boundary(usize),
    /// The bisector with `site` translated by `image` periods.
    Site { site: usize, image: Image },
}

/// Cells of a power diagram, one per site; empty cells are kept as `None`.
#[derive(Clone, Debug)]
pub struct CellPartition {
    sites: Vec<Point>,
    weights: Vec<f64>,
    cells: Vec<Option<ConvexPolygon>>,
    sources: Vec<Vec<EdgeSource>>,
    boundary_flags: Vec<bool>,
    periods: Option<(f64, f64)>,
}

impl CellPartition {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Point] {
        &self.sites
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cells(&self) -> &[Option<ConvexPolygon>] {
        &self.cells
    }

    pub fn cell(&self, i: usize) -> Option<&ConvexPolygon> {
        self.cells[i].as_ref()
    }

    /// Edge provenance of cell `i`, parallel to its polygon edges.
    pub fn edge_sources(&self, i: usize) -> &[EdgeSource] {
        &self.sources[i]
    }

    /// Whether each cell touches the domain boundary.
    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary_flags
    }

    pub fn periods(&self) -> Option<(f64, f64)> {
        self.periods
    }

    pub fn areas(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.as_ref().map_or(0.0, ConvexPolygon::area)).collect()
    }

    pub fn empty_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    /// Position of the image of `site` shifted by `image` periods.
    pub fn image_position(&self, site: usize, image: Image) -> Point {
        let (w, h) = self.periods.unwrap_or((0.0, 0.0));
        self.sites[site] + Point::new(image.i as f64 * w, image.j as f64 * h)
    }

    /// Edge counts per cell (0 for empty cells).
    pub fn edge_counts(&self) -> Vec<usize> {
        self.cells.iter().map(|c| c.as_ref().map_or(0, ConvexPolygon::edge_count)).collect()
    }

    /// Reassembles a partition from its parts. Used for partitions that are
    /// not power diagrams (trial states, external inputs).
    pub(crate) fn from_parts(
        sites: Vec<Point>,
        weights: Vec<f64>,
        cells: Vec<Option<ConvexPolygon>>,
        sources: Vec<Vec<EdgeSource>>,
        periods: Option<(f64, f64)>,
    ) -> Self {
        let boundary_flags = sources
            .iter()
            .map(|s| periods.is_none() && s.iter().any(|e| matches!(e, EdgeSource::Boundary(_))))
            .collect();
        Self { sites, weights, cells, sources, boundary_flags, periods }
    }

    /// Same cells with different sites (for cost evaluation after moving sites).
    pub fn with_sites(&self, sites: Vec<Point>) -> CellPartition {
        assert_eq!(sites.len(), self.sites.len());
        CellPartition { sites, ..self.clone() }
    }
}

/// One side of a shared edge, seen from cell `site`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeighborEdge {
    pub site: usize,
    pub neighbor: usize,
    pub image: Image,
    pub length: f64,
    /// Distance from `site` to the neighbor's image.
    pub distance: f64,
}

/// Site adjacency induced by shared cell edges.
#[derive(Clone, Debug, Default)]
pub struct NeighborGraph {
    /// Per site, the shared edges of its cell.
    pub neighbors: Vec<Vec<NeighborEdge>>,
}

impl NeighborGraph {
    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    /// Unordered site pairs sharing at least one edge, `(min, max)`, sorted.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .neighbors
            .iter()
            .flatten()
            .map(|e| (e.site.min(e.neighbor), e.site.max(e.neighbor)))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum()
    }

    /// Every directed edge `(i → j, image)` has its reverse `(j → i, -image)`.
    pub fn is_symmetric(&self) -> bool {
        self.neighbors.iter().flatten().all(|e| {
            self.neighbors[e.neighbor]
                .iter()
                .any(|r| r.neighbor == e.site && r.image == -e.image && (r.length - e.length).abs() < 1e-7)
        })
    }
}

/// Power diagram of `sites` clipped to the scaled polygon of `domain`.
pub fn power_diagram(domain: &DomainSpec, sites: &WeightedSites) -> Result<CellPartition> {
    let poly = domain
        .scaled_polygon()
        .ok_or_else(|| Error::InvalidDomain("power_diagram needs a polygonal domain; use power_diagram_periodic".into()))?;
    if let Some(i) = sites.points().iter().position(|&p| !domain.contains(p)) {
        return Err(Error::InvalidSites(format!("site {i} lies outside the domain")));
    }
    check_distinct(sites.points(), |a, b| b - a)?;
    Ok(planar_cells(poly, sites.points(), sites.weights()))
}

/// Power diagram on a flat torus by the 3×3 image construction.
///
/// Each site competes against the 3×3 block of period images of every site
/// (its own nontrivial images included), centered on the minimum image. The
/// result is exact when every image outside those blocks is provably
/// irrelevant; otherwise, or when a cell covers the whole torus,
/// [`Error::CellTooLarge`] is returned.
pub fn power_diagram_periodic(domain: &DomainSpec, sites: &WeightedSites) -> Result<CellPartition> {
    let (w, h) = domain
        .periods()
        .ok_or_else(|| Error::InvalidDomain("power_diagram_periodic needs a torus domain".into()))?;
    let points: Vec<Point> = sites.points().iter().map(|&p| domain.wrap(p)).collect();
    check_distinct(&points, |a, b| domain.displacement(a, b))?;
    periodic_cells(w, h, &points, sites.weights())
}

/// Cells for already validated sites, dispatching on the domain kind.
pub(crate) fn cells_unchecked(domain: &DomainSpec, points: &[Point], weights: &[f64]) -> Result<CellPartition> {
    match domain.scaled() {
        ScaledDomain::Polygon(poly) => Ok(planar_cells(poly, points, weights)),
        ScaledDomain::Torus { width, height } => periodic_cells(*width, *height, points, weights),
    }
}

/// Dispatches on the domain kind.
pub fn tessellate(domain: &DomainSpec, sites: &WeightedSites) -> Result<CellPartition> {
    if domain.is_torus() {
        power_diagram_periodic(domain, sites)
    } else {
        power_diagram(domain, sites)
    }
}

/// Shared-edge graph of a partition. Edges shorter than [`TOL_GEOM`] are ignored.
pub fn adjacency_graph(partition: &CellPartition) -> NeighborGraph {
    let neighbors = (0..partition.len())
        .map(|i| {
            let Some(cell) = partition.cell(i) else { return Vec::new() };
            let z = partition.sites()[i];
            cell.edges()
                .zip(partition.edge_sources(i))
                .filter_map(|((p, q), src)| match *src {
                    EdgeSource::Site { site, image } => {
                        let length = p.dist(q);
                        (length > TOL_GEOM).then(|| NeighborEdge {
                            site: i,
                            neighbor: site,
                            image,
                            length,
                            distance: z.dist(partition.image_position(site, image)),
                        })
                    }
                    EdgeSource::Boundary(_) => None,
                })
                .collect()
        })
        .collect();
    NeighborGraph { neighbors }
}

/// Containment and pairwise distinctness of sites for `domain`.
pub(crate) fn check_sites(domain: &DomainSpec, sites: &WeightedSites) -> Result<()> {
    if let Some(i) = sites.points().iter().position(|&p| !domain.contains(p)) {
        return Err(Error::InvalidSites(format!("site {i} lies outside the domain")));
    }
    if domain.is_torus() {
        let points: Vec<Point> = sites.points().iter().map(|&p| domain.wrap(p)).collect();
        check_distinct(&points, |a, b| domain.displacement(a, b))
    } else {
        check_distinct(sites.points(), |a, b| b - a)
    }
}

fn check_distinct(points: &[Point], disp: impl Fn(Point, Point) -> Point) -> Result<()> {
    // sweep in x; `disp` never shrinks |dx| below the planar gap except across
    // a period seam, so seam pairs are checked separately below
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].x.total_cmp(&points[b].x));
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if points[j].x - points[i].x > TOL_GEOM {
                break;
            }
            if disp(points[i], points[j]).norm() <= TOL_GEOM {
                return Err(Error::InvalidSites(format!("sites {i} and {j} coincide")));
            }
        }
    }
    let (Some(&first), Some(&last)) = (order.first(), order.last()) else { return Ok(()) };
    for &i in order.iter().take_while(|&&i| points[i].x - points[first].x <= TOL_GEOM) {
        for &j in order.iter().rev().take_while(|&&j| points[last].x - points[j].x <= TOL_GEOM) {
            if i != j && disp(points[i], points[j]).norm() <= TOL_GEOM {
                return Err(Error::InvalidSites(format!("sites {i} and {j} coincide")));
            }
        }
    }
    Ok(())
}

/// A competing site relative to the cell's own site.
#[derive(Clone, Copy)]
struct Candidate {
    offset: Point,
    dist_sq: f64,
    weight: f64,
    source: EdgeSource,
}

/// Cell under construction, in coordinates relative to its site.
struct Clipper {
    weight: f64,
    slack: f64,
    verts: Vec<Point>,
    labels: Vec<EdgeSource>,
    radius: f64,
}

impl Clipper {
    fn new(weight: f64, min_weight: f64, (verts, labels): (Vec<Point>, Vec<EdgeSource>)) -> Self {
        let radius = verts.iter().map(|v| v.norm()).fold(0.0, f64::max);
        Self { weight, slack: weight - min_weight, verts, labels, radius }
    }

    /// True if no site at distance `>= d` can cut the current cell.
    fn settled_beyond(&self, d: f64) -> bool {
        d >= self.radius && d * d - 2.0 * self.radius * d >= self.slack
    }

    /// Clips by one bisector; `false` once the cell is empty.
    fn clip(&mut self, c: &Candidate) -> bool {
        let d = c.dist_sq.sqrt();
        // {y : 2 y·d <= |d|² + ℓ_j - ℓ_i}
        let offset = (c.dist_sq + c.weight - self.weight) / (2.0 * d);
        let h = HalfPlane::new_unchecked(c.offset / d, offset);
        match clip_labeled(&self.verts, &self.labels, &h, c.source) {
            Some((v, l)) => {
                self.verts = v;
                self.labels = l;
                self.radius = self.verts.iter().map(|v| v.norm()).fold(0.0, f64::max);
                true
            }
            None => false,
        }
    }

    fn finish(self, site: Point) -> (Vec<Point>, Vec<EdgeSource>) {
        (self.verts.into_iter().map(|v| v + site).collect(), self.labels)
    }
}

/// Clips `start` (expressed relative to the site) by the bisectors of the
/// candidates, nearest first. Returns vertices in absolute coordinates.
fn clip_cell(
    site: Point,
    weight: f64,
    min_weight: f64,
    start: (Vec<Point>, Vec<EdgeSource>),
    mut candidates: Vec<Candidate>,
) -> Option<(Vec<Point>, Vec<EdgeSource>)> {
    candidates.sort_unstable_by(|a, b| a.dist_sq.total_cmp(&b.dist_sq));
    let mut cell = Clipper::new(weight, min_weight, start);
    for c in &candidates {
        if cell.settled_beyond(c.dist_sq.sqrt()) {
            break;
        }
        if !cell.clip(c) {
            return None;
        }
    }
    Some(cell.finish(site))
}

/// Uniform bucket grid over a point set, stored row-compressed.
struct BucketGrid {
    lo: Point,
    h: f64,
    nx: i64,
    ny: i64,
    start: Vec<usize>,
    items: Vec<usize>,
}

impl BucketGrid {
    fn new(points: &[Point]) -> Self {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let (w, ht) = ((hi.x - lo.x).max(1e-300), (hi.y - lo.y).max(1e-300));
        // about two points per bucket
        let h = (2.0 * w * ht / points.len() as f64).sqrt().max(w.max(ht) / 1024.0);
        let nx = ((w / h).floor() as i64 + 1).max(1);
        let ny = ((ht / h).floor() as i64 + 1).max(1);
        let mut grid = Self { lo, h, nx, ny, start: vec![0; (nx * ny + 1) as usize], items: vec![0; points.len()] };
        let keys: Vec<usize> = points.iter().map(|&p| grid.key(grid.bucket(p))).collect();
        for &k in &keys {
            grid.start[k + 1] += 1;
        }
        for k in 0..(nx * ny) as usize {
            grid.start[k + 1] += grid.start[k];
        }
        let mut fill = grid.start.clone();
        for (i, &k) in keys.iter().enumerate() {
            grid.items[fill[k]] = i;
            fill[k] += 1;
        }
        grid
    }

    fn bucket(&self, p: Point) -> (i64, i64) {
        let bx = (((p.x - self.lo.x) / self.h).floor() as i64).clamp(0, self.nx - 1);
        let by = (((p.y - self.lo.y) / self.h).floor() as i64).clamp(0, self.ny - 1);
        (bx, by)
    }

    fn key(&self, (bx, by): (i64, i64)) -> usize {
        (by * self.nx + bx) as usize
    }

    /// Points in buckets at Chebyshev distance exactly `r` from `c`.
    fn ring(&self, (cx, cy): (i64, i64), r: i64, out: &mut Vec<usize>) {
        let mut visit = |bx: i64, by: i64| {
            if (0..self.nx).contains(&bx) && (0..self.ny).contains(&by) {
                let k = self.key((bx, by));
                out.extend_from_slice(&self.items[self.start[k]..self.start[k + 1]]);
            }
        };
        if r == 0 {
            visit(cx, cy);
            return;
        }
        for bx in cx - r..=cx + r {
            visit(bx, cy - r);
            visit(bx, cy + r);
        }
        for by in cy - r + 1..cy + r {
            visit(cx - r, by);
            visit(cx + r, by);
        }
    }

    /// Largest ring around `c` that still meets the grid.
    fn max_ring(&self, (cx, cy): (i64, i64)) -> i64 {
        cx.max(self.nx - 1 - cx).max(cy).max(self.ny - 1 - cy)
    }
}

/// Planar power diagram without the inside-domain precondition on sites.
pub(crate) fn planar_cells(poly: &ConvexPolygon, points: &[Point], weights: &[f64]) -> CellPartition {
    let n = points.len();
    let min_weight = weights.iter().copied().fold(f64::INFINITY, f64::min);
    let grid = BucketGrid::new(points);
    let build = |i: usize| {
        let z = points[i];
        let start_v: Vec<Point> = poly.vertices().iter().map(|&v| v - z).collect();
        let start_l: Vec<EdgeSource> = (0..start_v.len()).map(EdgeSource::Boundary).collect();
        let mut cell = Clipper::new(weights[i], min_weight, (start_v, start_l));
        let home = grid.bucket(z);
        let mut ring = Vec::new();
        let mut batch = Vec::new();
        for r in 0..=grid.max_ring(home) {
            ring.clear();
            grid.ring(home, r, &mut ring);
            batch.clear();
            batch.extend(ring.iter().filter(|&&j| j != i).map(|&j| {
                let offset = points[j] - z;
                Candidate {
                    offset,
                    dist_sq: offset.norm_sq(),
                    weight: weights[j],
                    source: EdgeSource::Site { site: j, image: Image::ZERO },
                }
            }));
            batch.sort_unstable_by(|a, b| a.dist_sq.total_cmp(&b.dist_sq));
            for c in &batch {
                if cell.settled_beyond(c.dist_sq.sqrt()) {
                    break;
                }
                if !cell.clip(c) {
                    return None;
                }
            }
            // every site in a farther ring is at least `r·h` away
            if cell.settled_beyond(r as f64 * grid.h) {
                break;
            }
        }
        Some(cell.finish(z))
    };
    let built: Vec<_> = if n >= PARALLEL_THRESHOLD {
        (0..n).into_par_iter().map(build).collect()
    } else {
        (0..n).map(build).collect()
    };
    let (cells, sources) = built
        .into_iter()
        .map(|c| match c {
            Some((v, l)) => (Some(ConvexPolygon::from_vertices_unchecked(v)), l),
            None => (None, Vec::new()),
        })
        .unzip();
    CellPartition::from_parts(points.to_vec(), weights.to_vec(), cells, sources, None)
}

fn periodic_cells(w: f64, h: f64, points: &[Point], weights: &[f64]) -> Result<CellPartition> {
    let n = points.len();
    let min_weight = weights.iter().copied().fold(f64::INFINITY, f64::min);
    let period = w.min(h);
    let torus_area = w * h;
    let build = |i: usize| -> Result<(Option<ConvexPolygon>, Vec<EdgeSource>)> {
        let z = points[i];
        let bx = 1.5 * w;
        let by = 1.5 * h;
        let start_v = vec![Point::new(-bx, -by), Point::new(bx, -by), Point::new(bx, by), Point::new(-bx, by)];
        let start_l: Vec<EdgeSource> = (0..4).map(EdgeSource::Boundary).collect();
        let mut candidates = Vec::with_capacity(9 * n);
        for j in 0..n {
            let d = points[j] - z;
            let ci = -(d.x / w).round() as i32;
            let cj = -(d.y / h).round() as i32;
            for di in -1..=1 {
                for dj in -1..=1 {
                    let image = Image { i: ci + di, j: cj + dj };
                    if j == i && image == Image::ZERO {
                        continue;
                    }
                    let offset = d + Point::new(image.i as f64 * w, image.j as f64 * h);
                    candidates.push(Candidate {
                        offset,
                        dist_sq: offset.norm_sq(),
                        weight: weights[j],
                        source: EdgeSource::Site { site: j, image },
                    });
                }
            }
        }
        let Some((v, l)) = clip_cell(z, weights[i], min_weight, (start_v, start_l), candidates) else {
            return Ok((None, Vec::new()));
        };
        let radius = v.iter().map(|p| p.dist(z)).fold(0.0, f64::max);
        let cell = ConvexPolygon::from_vertices_unchecked(v);
        let touches_box = l.iter().any(|s| matches!(s, EdgeSource::Boundary(_)));
        // images outside the 3×3 blocks are at least 1.5 periods from z
        let far = 1.5 * period - radius;
        let safe = far > 0.0 && radius * radius + (weights[i] - min_weight) < far * far;
        if touches_box || !safe || cell.area() >= torus_area * (1.0 - 1e-9) {
            return Err(Error::CellTooLarge { site: i, radius, period });
        }
        Ok((Some(cell), l))
    };
    let built: Vec<_> = if n >= PARALLEL_THRESHOLD {
        (0..n).into_par_iter().map(build).collect::<Result<_>>()?
    } else {
        (0..n).map(build).collect::<Result<_>>()?
    };
    let (cells, sources) = built.into_iter().unzip();
    Ok(CellPartition::from_parts(points.to_vec(), weights.to_vec(), cells, sources, Some((w, h))))
}

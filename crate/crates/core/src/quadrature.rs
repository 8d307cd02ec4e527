//! Numerical integration used as an independent route to polygon moments.
//!
//! Nothing here shares code with the closed-form fan triangulation in
//! [`crate::geometry`]: polygon integrals are computed by horizontal slicing
//! with adaptive Simpson quadrature in the slice coordinate.

use crate::geometry::{ConvexPolygon, Point};

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Horizontal chord `[x_left, x_right]` of a convex polygon at height `y`.
fn chord(poly: &ConvexPolygon, y: f64) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (p, q) in poly.edges() {
        let (y0, y1) = (p.y.min(q.y), p.y.max(q.y));
        if y < y0 || y > y1 {
            continue;
        }
        let x = if (q.y - p.y).abs() < 1e-300 {
            lo = lo.min(p.x.min(q.x));
            hi = hi.max(p.x.max(q.x));
            continue;
        } else {
            p.x + (q.x - p.x) * (y - p.y) / (q.y - p.y)
        };
        lo = lo.min(x);
        hi = hi.max(x);
    }
    (lo <= hi).then_some((lo, hi))
}

/// Integrates `g(y, x_left, x_right)` over the slices of `poly`, splitting the
/// outer integral at every vertex height.
fn slice_integral<G: Fn(f64, f64, f64) -> f64>(poly: &ConvexPolygon, g: G, tol: f64) -> f64 {
    let mut ys: Vec<f64> = poly.vertices().iter().map(|p| p.y).collect();
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ys.dedup();
    let pieces = (ys.len() - 1).max(1) as f64;
    let mut total = 0.0;
    for w in ys.windows(2) {
        let f = |y: f64| chord(poly, y).map_or(0.0, |(l, r)| g(y, l, r));
        total += adaptive_simpson(&f, w[0], w[1], tol / pieces);
    }
    total
}

/// `∫_P |x - reference|² dx` by slicing quadrature.
pub fn polygon_second_moment(poly: &ConvexPolygon, reference: Point, tol: f64) -> f64 {
    slice_integral(
        poly,
        |y, l, r| {
            let dy = y - reference.y;
            let xl = l - reference.x;
            let xr = r - reference.x;
            (xr.powi(3) - xl.powi(3)) / 3.0 + dy * dy * (r - l)
        },
        tol,
    )
}

/// Area by slicing quadrature.
pub fn polygon_area(poly: &ConvexPolygon, tol: f64) -> f64 {
    slice_integral(poly, |_, l, r| r - l, tol)
}

/// Centroid by slicing quadrature.
pub fn polygon_centroid(poly: &ConvexPolygon, tol: f64) -> Point {
    let a = polygon_area(poly, tol);
    let mx = slice_integral(poly, |_, l, r| 0.5 * (r * r - l * l), tol);
    let my = slice_integral(poly, |y, l, r| y * (r - l), tol);
    Point::new(mx / a, my / a)
}

/// Midpoint-rule sample grid over the bounding box of `poly`, keeping the
/// samples that fall inside. Returns the sample points and the cell area.
pub fn grid_samples(poly: &ConvexPolygon, n: usize) -> (Vec<Point>, f64) {
    let (lo, hi) = poly.bounding_box();
    let hx = (hi.x - lo.x) / n as f64;
    let hy = (hi.y - lo.y) / n as f64;
    let mut pts = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let p = Point::new(lo.x + (i as f64 + 0.5) * hx, lo.y + (j as f64 + 0.5) * hy);
            if poly.contains(p) {
                pts.push(p);
            }
        }
    }
    (pts, hx * hy)
}

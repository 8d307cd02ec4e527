//! SVG 1.1 rendering of a partition.
//!
//! World coordinates are y-up; the viewport is the domain bounding box padded
//! by 5% on every side. Cells are filled by [`heat_color`] of their hexagon
//! deviation.

use std::fmt::Write as _;

use crate::analysis::hexagon_closeness;
use crate::geometry::{ConvexPolygon, Point};
use crate::tessellation::{CellPartition, DomainSpec, ScaledDomain};

/// Deviation at which the heat scale saturates.
pub const HEAT_SATURATION: f64 = 0.1;

/// Fill colour for hexagon deviation `eps`: blue at 0 through pale yellow at
/// half saturation to red at [`HEAT_SATURATION`] and beyond. Cells that are
/// not hexagons are grey.
pub fn heat_color(eps: f64) -> String {
    if !eps.is_finite() {
        return "#9a9a9a".into();
    }
    let stops = [(0.0, [44, 123, 182]), (0.5, [255, 255, 191]), (1.0, [215, 25, 28])];
    let t = (eps / HEAT_SATURATION).clamp(0.0, 1.0);
    let (lo, hi) = if t <= 0.5 { (stops[0], stops[1]) } else { (stops[1], stops[2]) };
    let s = (t - lo.0) / (hi.0 - lo.0);
    let c: Vec<u8> = (0..3).map(|k| (lo.1[k] as f64 + s * (hi.1[k] as f64 - lo.1[k] as f64)).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

struct Frame {
    lo: Point,
    hi: Point,
    scale: f64,
}

impl Frame {
    fn new(lo: Point, hi: Point, width_px: f64) -> Self {
        let pad = 0.05 * (hi.x - lo.x).max(hi.y - lo.y);
        let lo = lo - Point::new(pad, pad);
        let hi = hi + Point::new(pad, pad);
        Self { lo, hi, scale: width_px / (hi.x - lo.x) }
    }

    fn px(&self, p: Point) -> (f64, f64) {
        ((p.x - self.lo.x) * self.scale, (self.hi.y - p.y) * self.scale)
    }

    fn size(&self) -> (f64, f64) {
        ((self.hi.x - self.lo.x) * self.scale, (self.hi.y - self.lo.y) * self.scale)
    }

    fn points_attr(&self, poly: &ConvexPolygon, shift: Point) -> String {
        let mut s = String::new();
        for &v in poly.vertices() {
            let (x, y) = self.px(v + shift);
            let _ = write!(s, "{x:.3},{y:.3} ");
        }
        s.trim_end().to_string()
    }
}

/// Renders cells, site dots and the domain outline. `title` goes into the
/// document's `<title>`.
pub fn render_svg(domain: &DomainSpec, partition: &CellPartition, title: &str) -> String {
    let (lo, hi) = domain.bounding_box();
    let frame = Frame::new(lo, hi, 800.0);
    let (w, h) = frame.size();
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.3} {h:.3}">"#
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let outline = match domain.scaled() {
        ScaledDomain::Polygon(p) => p.clone(),
        ScaledDomain::Torus { width, height } => {
            ConvexPolygon::rectangle(Point::default(), *width, *height).expect("positive periods")
        }
    };
    let _ = writeln!(
        out,
        r#"<defs><clipPath id="domain"><polygon points="{}"/></clipPath></defs>"#,
        frame.points_attr(&outline, Point::default())
    );
    let shifts: Vec<Point> = match domain.periods() {
        Some((pw, ph)) => (-1..=1)
            .flat_map(|i| (-1..=1).map(move |j| Point::new(i as f64 * pw, j as f64 * ph)))
            .collect(),
        None => vec![Point::default()],
    };
    let stroke = (0.004 * w).max(0.5);
    let _ = writeln!(out, r##"<g clip-path="url(#domain)" stroke="#222222" stroke-width="{stroke:.3}">"##);
    for (i, cell) in partition.cells().iter().enumerate() {
        let Some(cell) = cell else { continue };
        let fill = heat_color(hexagon_closeness(cell));
        for &s in &shifts {
            let _ = writeln!(
                out,
                r#"<polygon data-cell="{i}" fill="{fill}" points="{}"/>"#,
                frame.points_attr(cell, s)
            );
        }
    }
    let _ = writeln!(out, "</g>");
    let radius = (0.006 * w).max(1.0);
    let _ = writeln!(out, r##"<g fill="#000000">"##);
    for &p in partition.sites() {
        let (x, y) = frame.px(domain.wrap(p));
        let _ = writeln!(out, r#"<circle cx="{x:.3}" cy="{y:.3}" r="{radius:.3}"/>"#);
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(
        out,
        r##"<polygon fill="none" stroke="#000000" stroke-width="{:.3}" points="{}"/>"##,
        2.0 * stroke,
        frame.points_attr(&outline, Point::default())
    );
    let _ = writeln!(out, "</svg>");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

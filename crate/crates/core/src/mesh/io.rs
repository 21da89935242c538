//! Plain-text mesh dumps and SVG rendering.

use std::fmt::Write as _;

use super::{EdgeKind, Triangulation};
use crate::geometry::Point;
use crate::{Error, Result};

/// Options for [`Triangulation::to_svg`].
#[derive(Debug, Clone)]
pub struct SvgStyle {
    /// Width of the drawing in pixels; height follows the aspect ratio.
    pub width: f64,
    pub stroke_width: f64,
    /// Shade elements by `log10` of the values instead of linearly.
    pub log_scale: bool,
}

impl Default for SvgStyle {
    fn default() -> Self {
        Self { width: 800.0, stroke_width: 0.4, log_scale: true }
    }
}

impl Triangulation {
    /// Header `NV NE NT`, then `id x y` per vertex, `id v0 v1 flag` per
    /// edge and `id v0 v1 v2 e0 e1 e2 ancestor` per element.
    pub fn to_dump(&self) -> String {
        let mut out = String::with_capacity(64 * (self.num_vertices() + self.num_edges() + self.num_elements()));
        writeln!(out, "{} {} {}", self.num_vertices(), self.num_edges(), self.num_elements()).unwrap();
        for (i, p) in self.vertices.iter().enumerate() {
            writeln!(out, "{i} {:.17e} {:.17e}", p.x, p.y).unwrap();
        }
        for (i, e) in self.edges.iter().enumerate() {
            writeln!(out, "{i} {} {} {}", e.vertices[0], e.vertices[1], e.kind.as_str()).unwrap();
        }
        for (i, el) in self.elements.iter().enumerate() {
            let [v0, v1, v2] = el.vertices;
            let [e0, e1, e2] = el.edges;
            writeln!(out, "{i} {v0} {v1} {v2} {e0} {e1} {e2} {}", el.coarse_ancestor).unwrap();
        }
        out
    }

    /// Parses [`Triangulation::to_dump`] output. Edge ids are rebuilt from
    /// the elements and checked against the file.
    pub fn from_dump(text: &str) -> Result<Triangulation> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty mesh dump".into()))?;
        let counts: Vec<usize> = parse_fields(header, 3)?;
        let (nv, ne, nt) = (counts[0], counts[1], counts[2]);

        let mut vertices = Vec::with_capacity(nv);
        for i in 0..nv {
            let line = lines.next().ok_or_else(|| Error::Parse(format!("missing vertex {i}")))?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::Parse(format!("vertex line `{line}`")));
            }
            let x = parse_f64(f[1])?;
            let y = parse_f64(f[2])?;
            vertices.push(Point::new(x, y));
        }
        let mut kinds = std::collections::HashMap::new();
        let mut edge_pairs = Vec::with_capacity(ne);
        for i in 0..ne {
            let line = lines.next().ok_or_else(|| Error::Parse(format!("missing edge {i}")))?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("edge line `{line}`")));
            }
            let a = parse_usize(f[1])?;
            let b = parse_usize(f[2])?;
            let kind: EdgeKind = f[3].parse()?;
            kinds.insert((a, b), kind);
            edge_pairs.push([a, b]);
        }
        let mut triangles = Vec::with_capacity(nt);
        let mut ancestors = Vec::with_capacity(nt);
        for i in 0..nt {
            let line = lines.next().ok_or_else(|| Error::Parse(format!("missing element {i}")))?;
            let f: Vec<usize> = parse_fields(line, 8)?;
            if f[1..4].iter().any(|&v| v >= nv) {
                return Err(Error::Parse(format!("element line `{line}` references a missing vertex")));
            }
            triangles.push([f[1], f[2], f[3]]);
            ancestors.push(f[7]);
        }
        let mesh = Triangulation::build(vertices, triangles, ancestors, 0, |lo, hi| kinds.get(&(lo, hi)).copied())?;
        for (i, e) in mesh.edges.iter().enumerate() {
            if edge_pairs.get(i) != Some(&e.vertices) {
                return Err(Error::Parse(format!("edge {i} does not match the element connectivity")));
            }
        }
        Ok(mesh)
    }

    /// Renders edges as line segments; `fill`, when given, shades each
    /// element by its value (one value per element).
    pub fn to_svg(&self, fill: Option<&[f64]>, style: &SvgStyle) -> String {
        let (mut lo, mut hi) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in &self.vertices {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let span = (hi.x - lo.x).max(hi.y - lo.y).max(f64::MIN_POSITIVE);
        let scale = style.width / span;
        let height = (hi.y - lo.y) * scale;
        let map = |p: Point| ((p.x - lo.x) * scale, (hi.y - p.y) * scale);

        let mut out = String::new();
        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.1}" height="{:.1}" viewBox="0 0 {:.3} {:.3}">"#,
            style.width, height, style.width, height
        )
        .unwrap();
        writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();

        if let Some(values) = fill {
            let transform = |v: f64| if style.log_scale { v.max(1e-300).log10() } else { v };
            let finite = values.iter().copied().filter(|v| v.is_finite() && (!style.log_scale || *v > 0.0));
            let (vmin, vmax) = finite.map(transform).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            writeln!(out, "<g stroke=\"none\">").unwrap();
            for k in 0..self.num_elements() {
                let v = values.get(k).copied().unwrap_or(0.0);
                let t = if vmax > vmin { ((transform(v) - vmin) / (vmax - vmin)).clamp(0.0, 1.0) } else { 0.0 };
                let pts = self.element_points(k).map(map);
                writeln!(
                    out,
                    r#"<polygon points="{:.3},{:.3} {:.3},{:.3} {:.3},{:.3}" fill="{}"/>"#,
                    pts[0].0, pts[0].1, pts[1].0, pts[1].1, pts[2].0, pts[2].1,
                    heat_color(t)
                )
                .unwrap();
            }
            writeln!(out, "</g>").unwrap();
        }

        writeln!(out, r#"<g stroke="black" stroke-width="{}" fill="none">"#, style.stroke_width).unwrap();
        for e in 0..self.num_edges() {
            let [a, b] = self.edge_points(e).map(map);
            writeln!(out, r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#, a.0, a.1, b.0, b.1).unwrap();
        }
        writeln!(out, "</g>\n</svg>").unwrap();
        out
    }
}

/// White → yellow → red ramp.
fn heat_color(t: f64) -> String {
    let (r, g, b) = if t < 0.5 {
        let s = t / 0.5;
        (255.0, 255.0, 255.0 * (1.0 - s))
    } else {
        let s = (t - 0.5) / 0.5;
        (255.0, 255.0 * (1.0 - s), 0.0)
    };
    format!("#{:02x}{:02x}{:02x}", r as u8, g as u8, b as u8)
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse(format!("expected an index, found `{s}`")))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse(format!("expected a number, found `{s}`")))
}

fn parse_fields(line: &str, n: usize) -> Result<Vec<usize>> {
    let f: Vec<usize> = line.split_whitespace().map(parse_usize).collect::<Result<_>>()?;
    if f.len() != n {
        return Err(Error::Parse(format!("expected {n} fields in `{line}`")));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use crate::mesh::{Domain, Triangulation};

    #[test]
    fn dump_header_and_roundtrip() {
        let m = Triangulation::initial(Domain::LShape).uniform_refine().unwrap();
        let text = m.to_dump();
        let first = text.lines().next().unwrap();
        assert_eq!(first, format!("{} {} {}", m.num_vertices(), m.num_edges(), m.num_elements()));
        let back = Triangulation::from_dump(&text).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.edges(), m.edges());
        assert_eq!(back.elements(), m.elements());
    }

    #[test]
    fn svg_has_one_line_per_edge() {
        let m = Triangulation::initial(Domain::UnitSquare);
        let values: Vec<f64> = (0..m.num_elements()).map(|k| k as f64 + 1.0).collect();
        let svg = m.to_svg(Some(&values), &Default::default());
        assert_eq!(svg.matches("<line").count(), m.num_edges());
        assert_eq!(svg.matches("<polygon").count(), m.num_elements());
    }

    #[test]
    fn malformed_dump_rejected() {
        assert!(Triangulation::from_dump("").is_err());
        assert!(Triangulation::from_dump("1 0 0\n0 x 1\n").is_err());
    }
}

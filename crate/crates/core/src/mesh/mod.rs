//! Conforming triangulations of polygonal domains.
//!
//! Local edge `i` of an element is the edge opposite its local vertex `i`.
//! Every edge carries one global unit normal, the clockwise rotation of the
//! direction from its lower-id to its higher-id vertex; `Element::signs`
//! records whether that normal points out of the element (`+1`) or into it
//! (`-1`).

pub mod io;
mod refine;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::geometry::{barycenter, orient, Point, Vector};
use crate::{Error, Result};

pub use io::SvgStyle;

/// Benchmark domains with their initial triangulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    /// `(−1,1)×(0,1) ∪ (−1,0)×(−1,0)`, six triangles.
    LShape,
    /// `(−1,1)²`, eight triangles, diagonals through the origin.
    Square2x2,
    /// `(0,1)²`, eight triangles, diagonals through the center.
    UnitSquare,
}

impl Domain {
    pub fn id(self) -> &'static str {
        match self {
            Domain::LShape => "lshape",
            Domain::Square2x2 => "square2x2",
            Domain::UnitSquare => "unit-square",
        }
    }

    pub fn area(self) -> f64 {
        match self {
            Domain::LShape => 3.0,
            Domain::Square2x2 => 4.0,
            Domain::UnitSquare => 1.0,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lshape" => Ok(Domain::LShape),
            "square2x2" => Ok(Domain::Square2x2),
            "unit-square" => Ok(Domain::UnitSquare),
            other => Err(Error::UnknownDomain(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Interior,
    Dirichlet,
    Neumann,
}

impl EdgeKind {
    pub fn is_boundary(self) -> bool {
        self != EdgeKind::Interior
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Interior => "interior",
            EdgeKind::Dirichlet => "dirichlet",
            EdgeKind::Neumann => "neumann",
        }
    }
}

impl FromStr for EdgeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interior" => Ok(EdgeKind::Interior),
            "dirichlet" => Ok(EdgeKind::Dirichlet),
            "neumann" => Ok(EdgeKind::Neumann),
            other => Err(Error::Parse(format!("unknown edge flag `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Lower vertex id first.
    pub vertices: [usize; 2],
    pub normal: Vector,
    pub length: f64,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    /// Counterclockwise.
    pub vertices: [usize; 3],
    /// `edges[i]` is opposite `vertices[i]`.
    pub edges: [usize; 3],
    /// `+1` where the global edge normal is outward to this element.
    pub signs: [f64; 3],
    pub area: f64,
    /// Longest edge length.
    pub diameter: f64,
    pub coarse_ancestor: usize,
}

/// Elements around a vertex in counterclockwise order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexStar {
    pub elements: Vec<usize>,
    pub on_boundary: bool,
}

#[derive(Debug, Clone)]
pub struct Triangulation {
    vertices: Vec<Point>,
    edges: Vec<Edge>,
    elements: Vec<Element>,
    edge_elements: Vec<[Option<usize>; 2]>,
    vertex_offsets: Vec<usize>,
    vertex_elements: Vec<usize>,
    generation: usize,
}

impl Triangulation {
    /// Initial triangulation of a benchmark domain. All boundary edges are
    /// Dirichlet; see [`Triangulation::with_boundary_kinds`].
    pub fn initial(domain: Domain) -> Self {
        let (vertices, triangles) = match domain {
            Domain::LShape => {
                let v = vec![
                    Point::new(-1.0, -1.0),
                    Point::new(0.0, -1.0),
                    Point::new(-1.0, 0.0),
                    Point::new(0.0, 0.0),
                    Point::new(1.0, 0.0),
                    Point::new(-1.0, 1.0),
                    Point::new(0.0, 1.0),
                    Point::new(1.0, 1.0),
                ];
                let mut t = Vec::new();
                split_square(&mut t, [3, 2, 0, 1]);
                split_square(&mut t, [3, 6, 5, 2]);
                split_square(&mut t, [3, 4, 7, 6]);
                (v, t)
            }
            Domain::Square2x2 => x_grid(-1.0, 1.0),
            Domain::UnitSquare => x_grid(0.0, 1.0),
        };
        let ancestors = (0..triangles.len()).collect();
        Self::build(vertices, triangles, ancestors, 0, |_, _| Some(EdgeKind::Dirichlet))
            .expect("initial meshes are conforming")
    }

    /// Builds a mesh from raw triangles (counterclockwise vertex triples).
    /// `boundary_kind(lo, hi)` classifies edges seen by one element only;
    /// `None` means the edge should have been interior (a hanging node).
    pub(crate) fn build<F>(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        ancestors: Vec<usize>,
        generation: usize,
        boundary_kind: F,
    ) -> Result<Self>
    where
        F: Fn(usize, usize) -> Option<EdgeKind>,
    {
        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 2);
        let mut edges = Vec::with_capacity(triangles.len() * 3 / 2 + 8);
        let mut edge_elements: Vec<[Option<usize>; 2]> = Vec::with_capacity(edges.capacity());
        let mut elements = Vec::with_capacity(triangles.len());

        for (k, (tri, &anc)) in triangles.iter().zip(&ancestors).enumerate() {
            let p = tri.map(|v| vertices[v]);
            let area = 0.5 * orient(p[0], p[1], p[2]);
            if !(area > 0.0) {
                return Err(Error::DegenerateElement { element: k, area });
            }
            let mut local_edges = [0; 3];
            let mut signs = [0.0; 3];
            let mut diameter: f64 = 0.0;
            for i in 0..3 {
                let a = tri[(i + 1) % 3];
                let b = tri[(i + 2) % 3];
                let key = (a.min(b), a.max(b));
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    let (pa, pb) = (vertices[key.0], vertices[key.1]);
                    let d = pb - pa;
                    let length = d.norm();
                    edges.push(Edge {
                        vertices: [key.0, key.1],
                        normal: (1.0 / length) * d.rot_cw(),
                        length,
                        kind: EdgeKind::Interior,
                    });
                    edge_elements.push([None, None]);
                    edges.len() - 1
                });
                let slot = &mut edge_elements[id];
                if slot[0].is_none() {
                    slot[0] = Some(k);
                } else if slot[1].is_none() {
                    slot[1] = Some(k);
                } else {
                    return Err(Error::Parse(format!("edge {key:?} shared by more than two elements")));
                }
                local_edges[i] = id;
                signs[i] = if a < b { 1.0 } else { -1.0 };
                diameter = diameter.max(edges[id].length);
            }
            elements.push(Element {
                vertices: *tri,
                edges: local_edges,
                signs,
                area,
                diameter,
                coarse_ancestor: anc,
            });
        }

        for (e, inc) in edge_elements.iter().enumerate() {
            if inc[1].is_none() {
                let [lo, hi] = edges[e].vertices;
                match boundary_kind(lo, hi) {
                    Some(kind) if kind.is_boundary() => edges[e].kind = kind,
                    _ => {
                        return Err(Error::Parse(format!(
                            "non-conforming mesh: edge ({lo}, {hi}) has a single element but is not on the boundary"
                        )))
                    }
                }
            }
        }

        let mut counts = vec![0usize; vertices.len() + 1];
        for el in &elements {
            for &v in &el.vertices {
                counts[v + 1] += 1;
            }
        }
        for i in 0..vertices.len() {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut vertex_elements = vec![0; counts[vertices.len()]];
        for (k, el) in elements.iter().enumerate() {
            for &v in &el.vertices {
                vertex_elements[fill[v]] = k;
                fill[v] += 1;
            }
        }

        Ok(Self {
            vertices,
            edges,
            elements,
            edge_elements,
            vertex_offsets: counts,
            vertex_elements,
            generation,
        })
    }

    /// Reclassifies boundary edges by their midpoint. The rule must not
    /// return [`EdgeKind::Interior`]; such results are ignored.
    pub fn with_boundary_kinds<F: Fn(Point) -> EdgeKind>(mut self, rule: F) -> Self {
        for e in 0..self.edges.len() {
            if self.edges[e].kind.is_boundary() {
                let [a, b] = self.edges[e].vertices;
                let kind = rule(self.vertices[a].midpoint(self.vertices[b]));
                if kind.is_boundary() {
                    self.edges[e].kind = kind;
                }
            }
        }
        self
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn element_points(&self, k: usize) -> [Point; 3] {
        self.elements[k].vertices.map(|v| self.vertices[v])
    }

    pub fn edge_points(&self, e: usize) -> [Point; 2] {
        self.edges[e].vertices.map(|v| self.vertices[v])
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let [a, b] = self.edge_points(e);
        a.midpoint(b)
    }

    pub fn barycenter(&self, k: usize) -> Point {
        barycenter(self.element_points(k))
    }

    pub fn total_area(&self) -> f64 {
        self.elements.iter().map(|e| e.area).sum()
    }

    /// Incident elements of an edge: one for boundary edges, two otherwise.
    pub fn edge_neighbors(&self, e: usize) -> [Option<usize>; 2] {
        self.edge_elements[e]
    }

    /// The element across edge `e` from `k`, if any.
    pub fn across(&self, k: usize, e: usize) -> Option<usize> {
        match self.edge_elements[e] {
            [Some(a), b] if a == k => b,
            [Some(a), Some(b)] if b == k => Some(a),
            _ => None,
        }
    }

    /// `ω_σ`: the elements sharing edge `σ`.
    pub fn edge_patch(&self, e: usize) -> Result<Vec<usize>> {
        self.check_id("edge", e, self.edges.len())?;
        Ok(self.edge_elements[e].iter().flatten().copied().collect())
    }

    /// Elements containing vertex `z`, unordered.
    pub fn vertex_elements(&self, z: usize) -> &[usize] {
        &self.vertex_elements[self.vertex_offsets[z]..self.vertex_offsets[z + 1]]
    }

    /// Elements containing vertex `z`, ordered counterclockwise around it.
    /// For boundary vertices the walk starts at the element whose clockwise
    /// edge at `z` lies on the boundary.
    pub fn vertex_star(&self, z: usize) -> Result<VertexStar> {
        self.check_id("vertex", z, self.vertices.len())?;
        let around = self.vertex_elements(z);
        // (next-ccw edge, previous edge) at z for an element
        let edges_at = |k: usize| {
            let el = &self.elements[k];
            let i = el.vertices.iter().position(|&v| v == z).expect("element contains z");
            (el.edges[(i + 1) % 3], el.edges[(i + 2) % 3])
        };
        let start = around
            .iter()
            .copied()
            .find(|&k| self.across(k, edges_at(k).1).is_none());
        let on_boundary = start.is_some();
        let start = start.or_else(|| around.iter().copied().min());
        let mut elements = Vec::with_capacity(around.len());
        let mut current = start;
        while let Some(k) = current {
            elements.push(k);
            if elements.len() > around.len() {
                return Err(Error::Parse(format!("vertex star of {z} does not close")));
            }
            current = self.across(k, edges_at(k).0).filter(|&n| Some(n) != start);
        }
        if elements.len() != around.len() {
            return Err(Error::Parse(format!("vertex star of {z} is not edge-connected")));
        }
        Ok(VertexStar { elements, on_boundary })
    }

    /// Elements whose closure meets the closure of edge `e` (vertex
    /// neighbours included), sorted by id.
    pub fn edge_vertex_patch(&self, e: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.edges[e]
            .vertices
            .iter()
            .flat_map(|&v| self.vertex_elements(v).iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Elements whose closure meets the closure of element `k`, sorted by id.
    pub fn element_vertex_patch(&self, k: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.elements[k]
            .vertices
            .iter()
            .flat_map(|&v| self.vertex_elements(v).iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Local index of edge `e` in element `k`.
    pub fn local_edge(&self, k: usize, e: usize) -> Option<usize> {
        self.elements[k].edges.iter().position(|&x| x == e)
    }

    /// Local index of the longest edge of `k`; ties go to the edge with the
    /// lexicographically smallest vertex pair.
    pub fn longest_local_edge(&self, k: usize) -> usize {
        let el = &self.elements[k];
        let mut best = 0;
        for i in 1..3 {
            let (a, b) = (&self.edges[el.edges[i]], &self.edges[el.edges[best]]);
            if a.length > b.length || (a.length == b.length && a.vertices < b.vertices) {
                best = i;
            }
        }
        best
    }

    /// Smallest interior angle over all elements, in radians.
    pub fn min_angle(&self) -> f64 {
        (0..self.elements.len())
            .flat_map(|k| {
                let p = self.element_points(k);
                (0..3).map(move |i| {
                    let u = p[(i + 1) % 3] - p[i];
                    let v = p[(i + 2) % 3] - p[i];
                    u.cross(v).abs().atan2(u.dot(v))
                })
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `(min, max)` of `|K| / h_K²`; the shape constant is
    /// `c₀ = max(1/min, max)`.
    pub fn shape_bounds(&self) -> (f64, f64) {
        self.elements.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), el| {
            let q = el.area / (el.diameter * el.diameter);
            (lo.min(q), hi.max(q))
        })
    }

    /// Edge-incidence audit: boundary edges have one element, interior
    /// edges two with opposite orientation signs.
    pub fn check_conformity(&self) -> Result<()> {
        for (e, inc) in self.edge_elements.iter().enumerate() {
            let edge = &self.edges[e];
            match (inc, edge.kind.is_boundary()) {
                ([Some(_), None], true) => {}
                ([Some(k), Some(l)], false) => {
                    let sk = self.elements[*k].signs[self.local_edge(*k, e).unwrap()];
                    let sl = self.elements[*l].signs[self.local_edge(*l, e).unwrap()];
                    if sk * sl != -1.0 {
                        return Err(Error::Parse(format!("edge {e}: incident orientations agree")));
                    }
                }
                _ => return Err(Error::Parse(format!("edge {e}: bad incidence {inc:?} for {:?}", edge.kind))),
            }
        }
        Ok(())
    }

    fn check_id(&self, kind: &'static str, id: usize, count: usize) -> Result<()> {
        if id < count {
            Ok(())
        } else {
            Err(Error::InvalidId { kind, id, count })
        }
    }
}

/// Splits a square given by counterclockwise corners along the diagonal
/// through `c[0]`.
fn split_square(out: &mut Vec<[usize; 3]>, c: [usize; 4]) {
    out.push([c[0], c[1], c[2]]);
    out.push([c[0], c[2], c[3]]);
}

/// `(lo,hi)²` as four squares, each split along a diagonal parallel to `(1, -1)`.
fn x_grid(lo: f64, hi: f64) -> (Vec<Point>, Vec<[usize; 3]>) {
    let mid = 0.5 * (lo + hi);
    let coords = [lo, mid, hi];
    let mut v = Vec::with_capacity(9);
    for &y in &coords {
        for &x in &coords {
            v.push(Point::new(x, y));
        }
    }
    let id = |i: usize, j: usize| j * 3 + i;
    let c = id(1, 1);
    let mut t = Vec::with_capacity(8);
    // all diagonals parallel to (1, -1)
    split_square(&mut t, [id(0, 1), id(0, 0), id(1, 0), c]);
    split_square(&mut t, [c, id(1, 0), id(2, 0), id(2, 1)]);
    split_square(&mut t, [id(2, 1), id(2, 2), id(1, 2), c]);
    split_square(&mut t, [c, id(1, 2), id(0, 2), id(0, 1)]);
    (v, t)
}

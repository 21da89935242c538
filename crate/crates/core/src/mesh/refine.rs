//! Longest-edge bisection with conformity closure.
//!
//! Refinement edges are marked first: each marked element marks its
//! longest edge, and any element with a marked edge must also have its
//! longest edge marked. The closure is a fixed point over edge marks, so it
//! terminates after at most `num_edges` propagation steps. Each element is
//! then bisected through its longest edge, and its children are bisected
//! again through any other marked edge of the parent.

use std::collections::HashMap;

use super::{EdgeKind, Triangulation};
use crate::{Error, Result};

impl Triangulation {
    /// Bisects every marked element through its longest edge and closes
    /// the result to a conforming mesh.
    pub fn refine(&self, marked: &[usize]) -> Result<Triangulation> {
        let ne = self.num_edges();
        let nt = self.num_elements();
        let mut edge_marked = vec![false; ne];
        let mut work: Vec<usize> = Vec::new();

        for &k in marked {
            if k >= nt {
                return Err(Error::InvalidId { kind: "element", id: k, count: nt });
            }
            let e = self.elements[k].edges[self.longest_local_edge(k)];
            if !edge_marked[e] {
                edge_marked[e] = true;
                work.extend(self.edge_elements[e].iter().flatten());
            }
        }

        // every push follows a new edge mark, two elements per edge at most
        let cap = 2 * ne + 2 * marked.len();
        let mut steps = 0usize;
        while let Some(k) = work.pop() {
            steps += 1;
            if steps > cap {
                return Err(Error::Parse("refinement closure did not terminate".into()));
            }
            let el = &self.elements[k];
            if !el.edges.iter().any(|&e| edge_marked[e]) {
                continue;
            }
            let e = el.edges[self.longest_local_edge(k)];
            if !edge_marked[e] {
                edge_marked[e] = true;
                work.extend(self.edge_elements[e].iter().flatten().filter(|&&l| l != k));
            }
        }

        let mut vertices = self.vertices.clone();
        let mut midpoint = vec![usize::MAX; ne];
        let mut boundary: HashMap<(usize, usize), EdgeKind> = HashMap::new();
        for (e, edge) in self.edges.iter().enumerate() {
            let [a, b] = edge.vertices;
            if edge_marked[e] {
                midpoint[e] = vertices.len();
                vertices.push(self.vertices[a].midpoint(self.vertices[b]));
                if edge.kind.is_boundary() {
                    let m = midpoint[e];
                    boundary.insert((a.min(m), a.max(m)), edge.kind);
                    boundary.insert((b.min(m), b.max(m)), edge.kind);
                }
            } else if edge.kind.is_boundary() {
                boundary.insert((a, b), edge.kind);
            }
        }

        let mut triangles = Vec::with_capacity(nt + marked.len() * 3);
        let mut ancestors = Vec::with_capacity(triangles.capacity());
        for (k, el) in self.elements.iter().enumerate() {
            let mid = |i: usize| midpoint[el.edges[i]];
            if el.edges.iter().all(|&e| !edge_marked[e]) {
                triangles.push(el.vertices);
                ancestors.push(el.coarse_ancestor);
                continue;
            }
            let l = self.longest_local_edge(k);
            let apex = el.vertices[l];
            let b = el.vertices[(l + 1) % 3];
            let c = el.vertices[(l + 2) % 3];
            let m = mid(l);
            debug_assert_ne!(m, usize::MAX, "closure left a longest edge unmarked");

            // (apex, b, m): edge apex–b is the parent's local edge l+2
            match mid((l + 2) % 3) {
                usize::MAX => triangles.push([apex, b, m]),
                q => {
                    triangles.push([m, apex, q]);
                    triangles.push([m, q, b]);
                }
            }
            // (apex, m, c): edge c–apex is the parent's local edge l+1
            match mid((l + 1) % 3) {
                usize::MAX => triangles.push([apex, m, c]),
                q => {
                    triangles.push([m, c, q]);
                    triangles.push([m, q, apex]);
                }
            }
            ancestors.resize(triangles.len(), el.coarse_ancestor);
        }

        Triangulation::build(vertices, triangles, ancestors, self.generation + 1, |lo, hi| {
            boundary.get(&(lo, hi)).copied()
        })
    }

    /// Marks every element.
    pub fn uniform_refine(&self) -> Result<Triangulation> {
        let all: Vec<usize> = (0..self.num_elements()).collect();
        self.refine(&all)
    }
}

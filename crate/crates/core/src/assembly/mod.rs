//! RT0 × P0 discretizations: the centered mixed scheme and the
//! upwind-weighted mixed scheme.
//!
//! Unknowns are one normal flux per edge, `∫_σ u_h·n_σ` with the global
//! edge normal, and one constant per element. Rows of the saddle system are
//! ordered as: free (non-Neumann) edges, then elements. Element rows are
//! stored with a minus sign so that the pure-diffusion system is symmetric.

mod local;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::geometry::{Point, Vector};
use crate::mesh::{EdgeKind, Triangulation};
use crate::problem::ProblemData;
use crate::solver::SparseMatrix;
use crate::verify::quadrature::{integrate_segment, rules};
use crate::{Error, Result};

pub use local::{basis_function, local_matrices, rt0_field, LocalMatrices, Rt0Field};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Centered,
    Upwind,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Centered => "centered",
            Scheme::Upwind => "upwind",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centered" => Ok(Scheme::Centered),
            "upwind" => Ok(Scheme::Upwind),
            other => Err(Error::Parse(format!("unknown scheme `{other}` (expected centered or upwind)"))),
        }
    }
}

/// Row numbering of the saddle system.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    /// Row of each edge; `None` for Neumann edges, whose flux is fixed.
    pub edge_row: Vec<Option<usize>>,
    pub free_edges: usize,
    pub num_elements: usize,
}

impl DofMap {
    pub fn new(mesh: &Triangulation) -> Self {
        let mut next = 0;
        let edge_row = mesh
            .edges()
            .iter()
            .map(|e| {
                (e.kind != EdgeKind::Neumann).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        Self { edge_row, free_edges: next, num_elements: mesh.num_elements() }
    }

    pub fn element_row(&self, k: usize) -> usize {
        self.free_edges + k
    }

    pub fn dim(&self) -> usize {
        self.free_edges + self.num_elements
    }
}

#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub dofs: DofMap,
    /// Neumann edges and their prescribed flux DOF.
    pub fixed_flux: Vec<(usize, f64)>,
    pub scheme: Scheme,
}

/// `(u_h, p_h)`: edge fluxes `∫_σ u_h·n_σ` and element values `p_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedSolution {
    pub flux: Vec<f64>,
    pub pressure: Vec<f64>,
    pub scheme: Scheme,
}

impl MixedSolution {
    /// Local DOFs of element `k` in its local edge order.
    pub fn local_dofs(&self, mesh: &Triangulation, k: usize) -> [f64; 3] {
        mesh.elements()[k].edges.map(|e| self.flux[e])
    }

    /// `u_h|_K = a + b x`.
    pub fn field(&self, mesh: &Triangulation, k: usize) -> Rt0Field {
        let el = &mesh.elements()[k];
        rt0_field(mesh.element_points(k), el.signs, el.area, self.local_dofs(mesh, k))
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            flux: self.flux.iter().map(|v| t * v).collect(),
            pressure: self.pressure.iter().map(|v| t * v).collect(),
            scheme: self.scheme,
        }
    }
}

/// `w_{K,σ} = ∫_σ w·n_K` for local edge `i` of `k`, with `n_K` outward.
pub fn flux_through_edge(mesh: &Triangulation, k: usize, i: usize, w: Vector) -> f64 {
    let el = &mesh.elements()[k];
    let edge = &mesh.edges()[el.edges[i]];
    el.signs[i] * w.dot(edge.normal) * edge.length
}

/// Upstream weighting coefficient `ν_σ ∈ [0, ½]`.
///
/// `c_s_sigma` is the harmonic mean of the two `c_S` for interior edges and
/// the element's own `c_S` on the boundary.
pub fn upwind_weight(w_ks: f64, c_s_sigma: f64, length: f64, diameter: f64, exterior: bool) -> f64 {
    if w_ks == 0.0 || (exterior && w_ks < 0.0) {
        0.0
    } else {
        (c_s_sigma * length / (diameter * w_ks.abs())).min(0.5)
    }
}

/// Coefficients `(on p_K, on the other side)` of `p̂_σ`; the other side is
/// `p_L` for interior edges and the boundary value for exterior ones.
pub fn upwind_value_coeffs(nu: f64, w_ks: f64) -> (f64, f64) {
    if w_ks >= 0.0 {
        (1.0 - nu, nu)
    } else {
        (nu, 1.0 - nu)
    }
}

/// Upwind data of local edge `i` of element `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpwindFace {
    pub w_ks: f64,
    pub nu: f64,
    pub neighbor: Option<usize>,
    pub kind: EdgeKind,
}

impl UpwindFace {
    /// `(on p_K, on the other side)`; Neumann edges carry `p_K` through.
    pub fn coeffs(&self) -> (f64, f64) {
        if self.kind == EdgeKind::Neumann {
            (1.0, 0.0)
        } else {
            upwind_value_coeffs(self.nu, self.w_ks)
        }
    }
}

pub fn upwind_face(mesh: &Triangulation, problem: &ProblemData, k: usize, i: usize) -> UpwindFace {
    let el = &mesh.elements()[k];
    let e = el.edges[i];
    let edge = &mesh.edges()[e];
    let w = problem.coefficients(mesh, k).velocity;
    let w_ks = flux_through_edge(mesh, k, i, w);
    let neighbor = mesh.across(k, e);
    let c_k = problem.bounds(mesh, k).c_s;
    let c_sigma = match neighbor {
        Some(l) => {
            let c_l = problem.bounds(mesh, l).c_s;
            2.0 * c_k * c_l / (c_k + c_l)
        }
        None => c_k,
    };
    let nu = if edge.kind == EdgeKind::Neumann {
        0.0
    } else {
        upwind_weight(w_ks, c_sigma, edge.length, edge.length, neighbor.is_none())
    };
    UpwindFace { w_ks, nu, neighbor, kind: edge.kind }
}

/// Mean of the Dirichlet data over edge `e` (3-point Gauss).
pub fn dirichlet_mean(mesh: &Triangulation, problem: &ProblemData, e: usize) -> f64 {
    let [a, b] = mesh.edge_points(e);
    integrate_segment(a, b, 3, |x| problem.dirichlet(x)) / mesh.edges()[e].length
}

/// `∫_K f` with the seven-point rule.
pub fn source_integral(mesh: &Triangulation, problem: &ProblemData, k: usize) -> f64 {
    rules().seven.integrate(mesh.element_points(k), mesh.elements()[k].area, |x| problem.source(x))
}

pub fn assemble(mesh: &Triangulation, problem: &ProblemData, scheme: Scheme) -> Result<SaddleSystem> {
    let dofs = DofMap::new(mesh);
    let mut fixed = vec![None; mesh.num_edges()];
    let mut fixed_flux = Vec::new();
    for (e, edge) in mesh.edges().iter().enumerate() {
        if edge.kind == EdgeKind::Neumann {
            let k = mesh.edge_neighbors(e)[0].expect("boundary edge has an element");
            let i = mesh.local_edge(k, e).unwrap();
            let s = mesh.elements()[k].signs[i];
            let [a, b] = mesh.edge_points(e);
            let outward = s * edge.normal;
            let g = s * integrate_segment(a, b, 3, |x| problem.neumann(x, outward));
            fixed[e] = Some(g);
            fixed_flux.push((e, g));
        }
    }

    let contributions: Vec<ElementContribution> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|k| element_contribution(mesh, problem, scheme, &dofs, &fixed, k))
        .collect::<Result<_>>()?;

    let nnz: usize = contributions.iter().map(|c| c.entries.len()).sum();
    let mut entries = Vec::with_capacity(nnz);
    let mut rhs = vec![0.0; dofs.dim()];
    for c in contributions {
        entries.extend(c.entries);
        for (row, v) in c.rhs {
            rhs[row] += v;
        }
    }
    let matrix = SparseMatrix::from_triplets(dofs.dim(), dofs.dim(), &entries);
    Ok(SaddleSystem { matrix, rhs, dofs, fixed_flux, scheme })
}

pub fn assemble_centered(mesh: &Triangulation, problem: &ProblemData) -> Result<SaddleSystem> {
    assemble(mesh, problem, Scheme::Centered)
}

pub fn assemble_upwind(mesh: &Triangulation, problem: &ProblemData) -> Result<SaddleSystem> {
    assemble(mesh, problem, Scheme::Upwind)
}

struct ElementContribution {
    entries: Vec<(usize, usize, f64)>,
    rhs: Vec<(usize, f64)>,
}

fn element_contribution(
    mesh: &Triangulation,
    problem: &ProblemData,
    scheme: Scheme,
    dofs: &DofMap,
    fixed: &[Option<f64>],
    k: usize,
) -> Result<ElementContribution> {
    let el = &mesh.elements()[k];
    let coeffs = problem.coefficients(mesh, k);
    let local = local_matrices(mesh.element_points(k), el.signs, el.area, coeffs)
        .map_err(|_| Error::DegenerateElement { element: k, area: el.area })?;
    let row_k = dofs.element_row(k);
    let mut entries = Vec::with_capacity(20);
    let mut rhs = Vec::with_capacity(8);

    // edge rows: (S⁻¹u_h, ψ_i) − (p_h, ∇·ψ_i) = −⟨p_D, ψ_i·n⟩
    for i in 0..3 {
        let e = el.edges[i];
        let Some(row) = dofs.edge_row[e] else { continue };
        for j in 0..3 {
            let ej = el.edges[j];
            match (dofs.edge_row[ej], fixed[ej]) {
                (Some(col), _) => entries.push((row, col, local.mass[i][j])),
                (None, Some(g)) => rhs.push((row, -local.mass[i][j] * g)),
                (None, None) => unreachable!("Neumann edge without data"),
            }
        }
        entries.push((row, row_k, -local.div[i]));
        if mesh.edges()[e].kind == EdgeKind::Dirichlet {
            rhs.push((row, -el.signs[i] * dirichlet_mean(mesh, problem, e)));
        }
    }

    // element row, negated
    let u_coeff = |j: usize| match scheme {
        Scheme::Centered => -local.div[j] + local.conv[j],
        Scheme::Upwind => -local.div[j],
    };
    for j in 0..3 {
        let ej = el.edges[j];
        let c = u_coeff(j);
        match (dofs.edge_row[ej], fixed[ej]) {
            (Some(col), _) => entries.push((row_k, col, c)),
            (None, Some(g)) => rhs.push((row_k, -c * g)),
            (None, None) => unreachable!("Neumann edge without data"),
        }
    }
    rhs.push((row_k, -source_integral(mesh, problem, k)));
    match scheme {
        Scheme::Centered => entries.push((row_k, row_k, -local.react)),
        Scheme::Upwind => {
            entries.push((row_k, row_k, -coeffs.reaction * el.area));
            for i in 0..3 {
                let face = upwind_face(mesh, problem, k, i);
                if face.w_ks == 0.0 {
                    continue;
                }
                let (c_own, c_other) = face.coeffs();
                entries.push((row_k, row_k, -face.w_ks * c_own));
                match (face.neighbor, face.kind) {
                    (Some(l), _) => entries.push((row_k, dofs.element_row(l), -face.w_ks * c_other)),
                    (None, EdgeKind::Dirichlet) => {
                        let pd = dirichlet_mean(mesh, problem, el.edges[i]);
                        rhs.push((row_k, face.w_ks * c_other * pd));
                    }
                    (None, _) => {}
                }
            }
        }
    }
    Ok(ElementContribution { entries, rhs })
}

/// Upwind value `p̂_σ` seen from element `k` through local edge `i`.
pub fn upwind_value(mesh: &Triangulation, problem: &ProblemData, sol: &MixedSolution, k: usize, i: usize) -> f64 {
    let face = upwind_face(mesh, problem, k, i);
    let (c_own, c_other) = face.coeffs();
    let other = match (face.neighbor, face.kind) {
        (Some(l), _) => sol.pressure[l],
        (None, EdgeKind::Dirichlet) => dirichlet_mean(mesh, problem, mesh.elements()[k].edges[i]),
        (None, _) => 0.0,
    };
    c_own * sol.pressure[k] + c_other * other
}

/// Pointwise `S_K⁻¹ u_h` on element `k`.
pub fn weighted_flux(mesh: &Triangulation, problem: &ProblemData, sol: &MixedSolution, k: usize, x: Point) -> Vector {
    problem.inverse_diffusion(mesh, k).apply(sol.field(mesh, k).eval(x))
}

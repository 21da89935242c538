//! The elementwise quadratic `p̃_h` with `−S_K∇p̃_h = u_h` and element mean
//! `p_K`, and the tangential jumps of the weighted flux across edges.

use rayon::prelude::*;

use crate::assembly::{MixedSolution, Rt0Field};
use crate::geometry::{barycenter, Point, Sym2, Vector};
use crate::mesh::Triangulation;
use crate::problem::ProblemData;
use crate::verify::quadrature::{integrate_segment, rules};

/// `p̃(x) = c + g·y + yᵀQy` with `y = x − center`.
///
/// Shifting to the barycenter keeps the coefficients of order one on small
/// elements; [`ElementQuadratic::monomials`] gives the global form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementQuadratic {
    pub element: usize,
    pub center: Point,
    pub constant: f64,
    pub linear: Vector,
    pub quadratic: Sym2,
}

impl ElementQuadratic {
    pub fn eval(&self, x: Point) -> f64 {
        let y = x - self.center;
        self.constant + self.linear.dot(y) + self.quadratic.quad_form(y, y)
    }

    pub fn grad(&self, x: Point) -> Vector {
        let y = x - self.center;
        self.linear + 2.0 * self.quadratic.apply(y)
    }

    /// Coefficients of `1, x, y, x², xy, y²` in global coordinates.
    pub fn monomials(&self) -> [f64; 6] {
        let (cx, cy) = (self.center.x, self.center.y);
        let q = self.quadratic;
        let c = self.constant - self.linear.dot(self.center) + q.quad_form(self.center, self.center);
        [
            c,
            self.linear.x - 2.0 * (q.xx * cx + q.xy * cy),
            self.linear.y - 2.0 * (q.xy * cx + q.yy * cy),
            q.xx,
            2.0 * q.xy,
            q.yy,
        ]
    }
}

/// Builds `p̃_h|_K` from `u_h|_K = a + b x`, `p_K` and `S_K⁻¹`.
pub fn build_ptilde(element: usize, points: [Point; 3], field: Rt0Field, p_k: f64, inverse_diffusion: &Sym2) -> ElementQuadratic {
    let center = barycenter(points);
    // u_h = a' + b y with a' = a + b·center
    let shifted = field.a + field.b * center;
    let linear = -inverse_diffusion.apply(shifted);
    let quadratic = inverse_diffusion.scaled(-0.5 * field.b);
    let mut q = ElementQuadratic { element, center, constant: 0.0, linear, quadratic };
    // the linear part has zero mean about the barycenter; the quadratic one
    // is integrated exactly by the degree-2 rule
    let mean: f64 = rules().midpoint3.map(points).map(|(x, w)| w * q.eval(x)).sum();
    q.constant = p_k - mean;
    q
}

pub fn ptilde(mesh: &Triangulation, problem: &ProblemData, sol: &MixedSolution, k: usize) -> ElementQuadratic {
    build_ptilde(
        k,
        mesh.element_points(k),
        sol.field(mesh, k),
        sol.pressure[k],
        problem.inverse_diffusion(mesh, k),
    )
}

pub fn ptilde_all(mesh: &Triangulation, problem: &ProblemData, sol: &MixedSolution) -> Vec<ElementQuadratic> {
    (0..mesh.num_elements()).into_par_iter().map(|k| ptilde(mesh, problem, sol, k)).collect()
}

/// `(p̃|_K)(z)` averaged over the elements sharing each vertex `z`.
pub fn nodal_average(mesh: &Triangulation, quadratics: &[ElementQuadratic]) -> Vec<f64> {
    (0..mesh.num_vertices())
        .map(|z| {
            let around = mesh.vertex_elements(z);
            let p = mesh.vertices()[z];
            around.iter().map(|&k| quadratics[k].eval(p)).sum::<f64>() / around.len() as f64
        })
        .collect()
}

fn jump_sq_with<F: Fn(usize) -> Sym2>(mesh: &Triangulation, sol: &MixedSolution, e: usize, weight: F) -> f64 {
    let edge = &mesh.edges()[e];
    let t = edge.normal.tangent_of_normal();
    let [a, b] = mesh.edge_points(e);
    let sides: Vec<(Sym2, Rt0Field)> =
        mesh.edge_neighbors(e).iter().flatten().map(|&k| (weight(k), sol.field(mesh, k))).collect();
    integrate_segment(a, b, 2, |x| {
        let trace = |(m, f): &(Sym2, Rt0Field)| m.apply(f.eval(x)).dot(t);
        let j = match sides.as_slice() {
            [one] => trace(one),
            [k, l] => trace(k) - trace(l),
            _ => 0.0,
        };
        j * j
    })
}

/// `‖[γ_t(S⁻¹u_h)]‖²_σ`; one-sided on boundary edges.
pub fn tangential_jump_sq(mesh: &Triangulation, problem: &ProblemData, sol: &MixedSolution, e: usize) -> f64 {
    jump_sq_with(mesh, sol, e, |k| *problem.inverse_diffusion(mesh, k))
}

/// `‖[γ_t(S^{-1/2}u_h)]‖²_σ`; one-sided on boundary edges.
pub fn tangential_jump_sq_scaled(mesh: &Triangulation, problem: &ProblemData, sol: &MixedSolution, e: usize) -> f64 {
    jump_sq_with(mesh, sol, e, |k| problem.inverse_diffusion(mesh, k).sqrt())
}

/// `max_K |S_K∇p̃ + u_h| / (1 + |u_h|)` at the seven-point nodes and
/// `max_K |mean(p̃) − p_K|`, with the mean taken by the seven-point rule.
pub fn identity_defects(mesh: &Triangulation, problem: &ProblemData, sol: &MixedSolution) -> (f64, f64) {
    (0..mesh.num_elements())
        .into_par_iter()
        .map(|k| {
            let q = ptilde(mesh, problem, sol, k);
            let s = problem.coefficients(mesh, k).diffusion;
            let u = sol.field(mesh, k);
            let pts = mesh.element_points(k);
            let mut grad: f64 = 0.0;
            let mut mean = 0.0;
            for (x, w) in rules().seven.map(pts) {
                let uh = u.eval(x);
                grad = grad.max((s.apply(q.grad(x)) + uh).norm() / (1.0 + uh.norm()));
                mean += w * q.eval(x);
            }
            (grad, (mean - sol.pressure[k]).abs())
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)))
}

/// `∫_σ p̃|_K − ∫_σ p̃|_L` on every interior edge (zero on boundary edges).
pub fn edge_mean_jumps(mesh: &Triangulation, quadratics: &[ElementQuadratic]) -> Vec<f64> {
    (0..mesh.num_edges())
        .map(|e| match mesh.edge_neighbors(e) {
            [Some(k), Some(l)] => {
                let [a, b] = mesh.edge_points(e);
                integrate_segment(a, b, 2, |x| quadratics[k].eval(x) - quadratics[l].eval(x))
            }
            _ => 0.0,
        })
        .collect()
}

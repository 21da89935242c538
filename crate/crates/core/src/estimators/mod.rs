//! Elementwise a posteriori estimators for both schemes, the alternative
//! indicator `ξ_K` for discontinuous diffusion, and the marking total.
//!
//! All quantities are computed from an immutable solution through an
//! [`EstimatorContext`], which caches the per-edge jump integrals and the
//! per-element weighted flux norms shared by several families.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;

use crate::assembly::{source_integral, upwind_face, upwind_value, MixedSolution, Scheme};
use crate::mesh::{EdgeKind, Triangulation};
use crate::postprocess::{tangential_jump_sq, tangential_jump_sq_scaled};
use crate::problem::{patch_quantities, PatchQuantities, ProblemData};
use crate::verify::quadrature::rules;
use crate::{Error, Result};

/// Relative tolerance for "same coefficient class" around a vertex.
pub const CLASS_TOLERANCE: f64 = 1e-9;

/// Which families make up the marking total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    /// `√(η_D² + η_R² + η_NC² + η_C² [+ η_U²])`.
    Theorem,
    /// `ξ_K`.
    Xi,
}

impl Policy {
    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Theorem => "theorem",
            Policy::Xi => "xi",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem" => Ok(Policy::Theorem),
            "xi" => Ok(Policy::Xi),
            other => Err(Error::Parse(format!("unknown indicator policy `{other}` (expected theorem or xi)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualWeights {
    pub alpha: f64,
    pub beta: f64,
}

/// `α_K = min(h_K/√c_S, 1/√c_wr)`, `β_K = C_wr h_K α_K`; `α_K = h_K/√c_S`
/// when `c_wr = 0`.
pub fn residual_weights(h: f64, c_s: f64, c_wr: f64, cap_wr: f64) -> ResidualWeights {
    let diffusive = h / c_s.sqrt();
    let alpha = if c_wr > 0.0 { diffusive.min(1.0 / c_wr.sqrt()) } else { diffusive };
    ResidualWeights { alpha, beta: cap_wr * h * alpha }
}

/// `p̂̂_σ` for local edge `i` of `k`; zero on Neumann edges.
pub fn hat_hat_p(mesh: &Triangulation, problem: &ProblemData, sol: &MixedSolution, k: usize, i: usize) -> f64 {
    let face = upwind_face(mesh, problem, k, i);
    if face.kind == EdgeKind::Neumann {
        return 0.0;
    }
    let p_k = sol.pressure[k];
    match face.neighbor {
        Some(l) => {
            let p_l = sol.pressure[l];
            if face.w_ks >= 0.0 {
                (0.5 - face.nu) * (p_k - p_l)
            } else {
                (0.5 - face.nu) * (p_l - p_k)
            }
        }
        // p̂_σ − p_K with the boundary value on the other side
        None => upwind_value(mesh, problem, sol, k, i) - p_k,
    }
}

/// Vertices around which the elements of maximal `C_S` do not form one
/// contiguous fan.
pub fn detect_singular_vertices(mesh: &Triangulation, problem: &ProblemData) -> Result<Vec<bool>> {
    (0..mesh.num_vertices())
        .map(|z| {
            let star = mesh.vertex_star(z)?;
            let caps: Vec<f64> = star.elements.iter().map(|&k| problem.bounds(mesh, k).cap_s).collect();
            let max = caps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let top: Vec<bool> = caps.iter().map(|&c| c >= max * (1.0 - CLASS_TOLERANCE)).collect();
            let n = top.len();
            let runs = (0..n)
                .filter(|&i| {
                    let prev = if i > 0 {
                        top[i - 1]
                    } else if star.on_boundary {
                        false
                    } else {
                        top[n - 1]
                    };
                    top[i] && !prev
                })
                .count();
            // a closed star that is entirely maximal has no run start
            Ok(runs > 1)
        })
        .collect()
}

/// Estimators of one element.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ElementEstimators {
    pub eta_d: f64,
    pub eta_r: f64,
    pub eta_nc: f64,
    pub eta_c: f64,
    pub eta_u: f64,
    pub xi: f64,
    pub total: f64,
}

/// Global `√Σ(·)²` of every family.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GlobalEstimators {
    pub eta_d: f64,
    pub eta_r: f64,
    pub eta_nc: f64,
    pub eta_c: f64,
    pub eta_u: f64,
    pub xi: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorBreakdown {
    pub scheme: Scheme,
    pub policy: Policy,
    pub per_element: Vec<ElementEstimators>,
}

impl EstimatorBreakdown {
    pub fn totals(&self) -> Vec<f64> {
        self.per_element.iter().map(|e| e.total).collect()
    }

    pub fn global(&self) -> GlobalEstimators {
        let mut s = GlobalEstimators::default();
        for e in &self.per_element {
            s.eta_d += e.eta_d * e.eta_d;
            s.eta_r += e.eta_r * e.eta_r;
            s.eta_nc += e.eta_nc * e.eta_nc;
            s.eta_c += e.eta_c * e.eta_c;
            s.eta_u += e.eta_u * e.eta_u;
            s.xi += e.xi * e.xi;
            s.total += e.total * e.total;
        }
        GlobalEstimators {
            eta_d: s.eta_d.sqrt(),
            eta_r: s.eta_r.sqrt(),
            eta_nc: s.eta_nc.sqrt(),
            eta_c: s.eta_c.sqrt(),
            eta_u: s.eta_u.sqrt(),
            xi: s.xi.sqrt(),
            total: s.total.sqrt(),
        }
    }

    /// `element_id,eta_D,eta_R,eta_NC,eta_C,eta_U,xi,total`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("element_id,eta_D,eta_R,eta_NC,eta_C,eta_U,xi,total\n");
        for (k, e) in self.per_element.iter().enumerate() {
            writeln!(
                out,
                "{k},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                e.eta_d, e.eta_r, e.eta_nc, e.eta_c, e.eta_u, e.xi, e.total
            )
            .unwrap();
        }
        out
    }
}

/// Cached data for evaluating the estimators of one solution.
pub struct EstimatorContext<'a> {
    pub mesh: &'a Triangulation,
    pub problem: &'a ProblemData,
    pub sol: &'a MixedSolution,
    pub patch: PatchQuantities,
    /// `‖[γ_t(S⁻¹u_h)]‖²_σ` per edge.
    pub jump_sq: Vec<f64>,
    /// `‖[γ_t(S^{-1/2}u_h)]‖²_σ` per edge.
    pub jump_scaled_sq: Vec<f64>,
    /// `‖S⁻¹u_h‖²_K` per element.
    pub flux_norm_sq: Vec<f64>,
    pub singular: Vec<bool>,
}

impl<'a> EstimatorContext<'a> {
    pub fn new(mesh: &'a Triangulation, problem: &'a ProblemData, sol: &'a MixedSolution) -> Result<Self> {
        let jumps: Vec<(f64, f64)> = (0..mesh.num_edges())
            .into_par_iter()
            .map(|e| (tangential_jump_sq(mesh, problem, sol, e), tangential_jump_sq_scaled(mesh, problem, sol, e)))
            .collect();
        let flux_norm_sq = (0..mesh.num_elements())
            .into_par_iter()
            .map(|k| {
                let sinv = problem.inverse_diffusion(mesh, k);
                let u = sol.field(mesh, k);
                rules()
                    .midpoint3
                    .integrate(mesh.element_points(k), mesh.elements()[k].area, |x| sinv.apply(u.eval(x)).norm_sq())
            })
            .collect();
        Ok(Self {
            mesh,
            problem,
            sol,
            patch: patch_quantities(mesh, problem),
            jump_sq: jumps.iter().map(|j| j.0).collect(),
            jump_scaled_sq: jumps.iter().map(|j| j.1).collect(),
            flux_norm_sq,
            singular: detect_singular_vertices(mesh, problem)?,
        })
    }

    fn h(&self, k: usize) -> f64 {
        self.mesh.elements()[k].diameter
    }

    fn delta(&self, e: usize) -> f64 {
        if self.mesh.edges()[e].kind.is_boundary() {
            1.0
        } else {
            0.5
        }
    }

    pub fn eta_d(&self, k: usize) -> f64 {
        let c_wr = self.problem.bounds(self.mesh, k).c_wr;
        (c_wr * self.h(k).powi(2) * self.flux_norm_sq[k]).sqrt()
    }

    /// `∇·u_h|_K` taken from the scheme's element equation; equal to the
    /// divergence of the computed field up to the solver residual.
    pub fn discrete_divergence(&self, k: usize) -> f64 {
        let (mesh, problem, sol) = (self.mesh, self.problem, self.sol);
        let area = mesh.elements()[k].area;
        let c = problem.coefficients(mesh, k);
        let f_k = source_integral(mesh, problem, k) / area;
        let p_k = sol.pressure[k];
        match sol.scheme {
            Scheme::Centered => {
                let sw = problem.inverse_diffusion(mesh, k).apply(c.velocity);
                let mean_conv = sw.dot(sol.field(mesh, k).eval(mesh.barycenter(k)));
                f_k + mean_conv - (c.reaction + c.div_velocity) * p_k
            }
            Scheme::Upwind => {
                let convective: f64 = (0..3)
                    .map(|i| upwind_face(mesh, problem, k, i).w_ks * upwind_value(mesh, problem, sol, k, i))
                    .sum();
                f_k - convective / area - c.reaction * p_k
            }
        }
    }

    pub fn eta_r(&self, k: usize) -> f64 {
        let (mesh, problem, sol) = (self.mesh, self.problem, self.sol);
        let b = problem.bounds(mesh, k);
        let c = problem.coefficients(mesh, k);
        let sinv = problem.inverse_diffusion(mesh, k);
        let weights = residual_weights(self.h(k), b.c_s, b.c_wr, b.cap_wr);
        let u = sol.field(mesh, k);
        let div = self.discrete_divergence(k);
        let reaction = (c.reaction + c.div_velocity) * sol.pressure[k];
        let residual_sq = rules().seven.integrate(mesh.element_points(k), mesh.elements()[k].area, |x| {
            let r = problem.source(x) - div + sinv.apply(u.eval(x)).dot(c.velocity) - reaction;
            r * r
        });
        (weights.alpha.powi(2) * residual_sq + weights.beta.powi(2) * self.flux_norm_sq[k]).sqrt()
    }

    pub fn eta_nc(&self, k: usize) -> f64 {
        let el = &self.mesh.elements()[k];
        let edges: f64 = el
            .edges
            .iter()
            .map(|&e| self.delta(e) * self.patch.lambda_s[e] * self.mesh.edges()[e].length * self.jump_sq[e])
            .sum();
        (self.patch.lambda_wr[k] * self.h(k).powi(2) * self.flux_norm_sq[k] + edges).sqrt()
    }

    pub fn eta_c(&self, k: usize) -> f64 {
        let el = &self.mesh.elements()[k];
        let edges: f64 = el
            .edges
            .iter()
            .map(|&e| self.delta(e) * self.patch.cap_lambda_w[e].powi(2) * self.mesh.edges()[e].length * self.jump_sq[e])
            .sum();
        (self.patch.lambda_divw[k].powi(2) * self.h(k).powi(2) * self.flux_norm_sq[k] + edges).sqrt()
    }

    /// Only defined for the upwind scheme.
    pub fn eta_u(&self, k: usize) -> Result<f64> {
        if self.sol.scheme != Scheme::Upwind {
            return Err(Error::SchemeMismatch("eta_U"));
        }
        let (mesh, problem) = (self.mesh, self.problem);
        let el = &mesh.elements()[k];
        let c_s = problem.bounds(mesh, k).c_s;
        let mut sum = 0.0;
        for i in 0..3 {
            let e = el.edges[i];
            let len = mesh.edges()[e].length;
            let wn = upwind_face(mesh, problem, k, i).w_ks / len;
            if wn == 0.0 {
                continue;
            }
            let hh = hat_hat_p(mesh, problem, self.sol, k, i);
            let patch: f64 = mesh.edge_neighbors(e).iter().flatten().map(|&l| self.flux_norm_sq[l]).sum();
            sum += wn * wn * (hh * hh * len + len * patch);
        }
        Ok((self.h(k) / c_s * sum).sqrt())
    }

    pub fn xi(&self, k: usize) -> f64 {
        let mesh = self.mesh;
        let el = &mesh.elements()[k];
        let len = |e: usize| mesh.edges()[e].length;
        if el.vertices.iter().any(|&z| self.singular[z]) {
            let cap = mesh
                .element_vertex_patch(k)
                .iter()
                .map(|&l| self.problem.bounds(mesh, l).cap_s)
                .fold(0.0, f64::max);
            el.edges.iter().map(|&e| cap * len(e) * self.jump_sq[e]).sum::<f64>().sqrt()
        } else {
            el.edges.iter().map(|&e| len(e) * self.jump_scaled_sq[e]).sum::<f64>().sqrt()
        }
    }

    pub fn element(&self, k: usize, policy: Policy) -> Result<ElementEstimators> {
        let eta_u = match self.sol.scheme {
            Scheme::Upwind => self.eta_u(k)?,
            Scheme::Centered => 0.0,
        };
        let mut e = ElementEstimators {
            eta_d: self.eta_d(k),
            eta_r: self.eta_r(k),
            eta_nc: self.eta_nc(k),
            eta_c: self.eta_c(k),
            eta_u,
            xi: self.xi(k),
            total: 0.0,
        };
        e.total = total_indicator(&e, self.sol.scheme, policy);
        Ok(e)
    }

    pub fn breakdown(&self, policy: Policy) -> Result<EstimatorBreakdown> {
        let per_element = (0..self.mesh.num_elements())
            .into_par_iter()
            .map(|k| self.element(k, policy))
            .collect::<Result<_>>()?;
        Ok(EstimatorBreakdown { scheme: self.sol.scheme, policy, per_element })
    }
}

pub fn total_indicator(e: &ElementEstimators, scheme: Scheme, policy: Policy) -> f64 {
    match policy {
        Policy::Xi => e.xi,
        Policy::Theorem => {
            let mut s = e.eta_d * e.eta_d + e.eta_r * e.eta_r + e.eta_nc * e.eta_nc + e.eta_c * e.eta_c;
            if scheme == Scheme::Upwind {
                s += e.eta_u * e.eta_u;
            }
            s.sqrt()
        }
    }
}

pub fn estimate(mesh: &Triangulation, problem: &ProblemData, sol: &MixedSolution, policy: Policy) -> Result<EstimatorBreakdown> {
    EstimatorContext::new(mesh, problem, sol)?.breakdown(policy)
}

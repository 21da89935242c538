//! Problem data: coefficients that are constant on each element of the
//! initial triangulation, source and boundary data, and derived bounds.
//!
//! Refined elements find their coefficients through
//! [`Element::coarse_ancestor`](crate::mesh::Element::coarse_ancestor).

mod benchmarks;

use std::fmt;
use std::sync::Arc;

use crate::geometry::{Point, Sym2, Vector};
use crate::mesh::Triangulation;
use crate::{Error, Result};

pub use benchmarks::{
    layer_profile, quadrant, Benchmark, BenchmarkSetup, ExactSolution, KelloggCase, KelloggCoefficients, KELLOGG_CASE_1,
    KELLOGG_CASE_2,
};

/// Data of one coarse element: `S`, `w`, `r` and `∇·w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementCoefficients {
    pub diffusion: Sym2,
    pub velocity: Vector,
    pub reaction: f64,
    pub div_velocity: f64,
}

impl ElementCoefficients {
    pub fn diffusion_only(diffusion: Sym2) -> Self {
        Self { diffusion, velocity: Vector::ZERO, reaction: 0.0, div_velocity: 0.0 }
    }

    pub fn bounds(&self) -> Result<CoefficientBounds> {
        derive_bounds(self)
    }
}

/// Elementwise coefficient bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientBounds {
    /// Smallest eigenvalue of `S`.
    pub c_s: f64,
    /// Largest eigenvalue of `S`.
    pub cap_s: f64,
    /// `|w|`.
    pub cap_w: f64,
    /// `½∇·w + r`.
    pub c_wr: f64,
    /// `|∇·w + r|`.
    pub cap_wr: f64,
    /// `|∇·w|`.
    pub cap_divw: f64,
}

pub fn derive_bounds(c: &ElementCoefficients) -> Result<CoefficientBounds> {
    let s = c.diffusion;
    if !s.is_finite() || !c.velocity.is_finite() || !c.reaction.is_finite() || !c.div_velocity.is_finite() {
        return Err(Error::InvalidCoefficients("non-finite coefficient".into()));
    }
    let (lo, hi) = s.eigenvalues();
    if !(lo > 0.0) {
        return Err(Error::InvalidCoefficients(format!("diffusion tensor is not positive definite (λ_min = {lo:e})")));
    }
    let c_wr = 0.5 * c.div_velocity + c.reaction;
    let cap_wr = (c.div_velocity + c.reaction).abs();
    if c_wr < 0.0 {
        return Err(Error::InvalidCoefficients(format!("½∇·w + r = {c_wr:e} is negative")));
    }
    if c_wr == 0.0 && cap_wr != 0.0 {
        return Err(Error::InvalidCoefficients(format!(
            "½∇·w + r vanishes while |∇·w + r| = {cap_wr:e}"
        )));
    }
    Ok(CoefficientBounds {
        c_s: lo,
        cap_s: hi,
        cap_w: c.velocity.norm(),
        c_wr,
        cap_wr,
        cap_divw: c.div_velocity.abs(),
    })
}

/// `num / √c_wr`, with `0/0 := 0` (the data assumptions force a zero
/// numerator wherever `c_wr` vanishes).
pub fn over_sqrt_cwr(num: f64, c_wr: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / c_wr.sqrt()
    }
}

pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
/// Prescribed normal flux `u·n` for a point and outward unit normal.
pub type FluxField = Arc<dyn Fn(Point, Vector) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ProblemData {
    coefficients: Vec<ElementCoefficients>,
    bounds: Vec<CoefficientBounds>,
    inverse_diffusion: Vec<Sym2>,
    source: ScalarField,
    dirichlet: ScalarField,
    neumann: FluxField,
}

impl fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemData")
            .field("coefficients", &self.coefficients)
            .field("bounds", &self.bounds)
            .finish_non_exhaustive()
    }
}

impl ProblemData {
    /// `coefficients[j]` belongs to element `j` of the initial mesh.
    pub fn new(
        coefficients: Vec<ElementCoefficients>,
        source: ScalarField,
        dirichlet: ScalarField,
        neumann: FluxField,
    ) -> Result<Self> {
        let bounds = coefficients.iter().map(derive_bounds).collect::<Result<Vec<_>>>()?;
        let inverse_diffusion = coefficients
            .iter()
            .map(|c| c.diffusion.inverse().expect("positive definite"))
            .collect();
        Ok(Self { coefficients, bounds, inverse_diffusion, source, dirichlet, neumann })
    }

    /// Same data with every `(u, p)`-independent input replaced; used to
    /// build homogeneous variants of a problem.
    pub fn with_fields(&self, source: ScalarField, dirichlet: ScalarField, neumann: FluxField) -> Self {
        Self { source, dirichlet, neumann, ..self.clone() }
    }

    pub fn coarse_coefficients(&self) -> &[ElementCoefficients] {
        &self.coefficients
    }

    pub fn coefficients(&self, mesh: &Triangulation, k: usize) -> &ElementCoefficients {
        &self.coefficients[mesh.elements()[k].coarse_ancestor]
    }

    pub fn bounds(&self, mesh: &Triangulation, k: usize) -> &CoefficientBounds {
        &self.bounds[mesh.elements()[k].coarse_ancestor]
    }

    pub fn inverse_diffusion(&self, mesh: &Triangulation, k: usize) -> &Sym2 {
        &self.inverse_diffusion[mesh.elements()[k].coarse_ancestor]
    }

    pub fn source(&self, x: Point) -> f64 {
        (self.source)(x)
    }

    pub fn dirichlet(&self, x: Point) -> f64 {
        (self.dirichlet)(x)
    }

    pub fn neumann(&self, x: Point, outward: Vector) -> f64 {
        (self.neumann)(x, outward)
    }

    pub fn has_convection(&self) -> bool {
        self.coefficients.iter().any(|c| c.velocity != Vector::ZERO)
    }
}

/// Patch maxima of the coefficient bounds over vertex neighbourhoods.
#[derive(Debug, Clone)]
pub struct PatchQuantities {
    /// `Λ_σ`: max `C_S` over elements touching `σ`.
    pub lambda_s: Vec<f64>,
    /// `λ_{w,σ}`: max `C_w / √c_wr` over elements touching `σ`.
    pub lambda_w: Vec<f64>,
    /// `p_{w,σ}`: max `h_K C_w / √c_S` over elements touching `σ`.
    pub peclet_w: Vec<f64>,
    /// `Λ_{w,σ} = min(λ_{w,σ}, p_{w,σ})`.
    pub cap_lambda_w: Vec<f64>,
    /// `Λ_{w,r,K}`: max `c_wr` over elements touching `K`.
    pub lambda_wr: Vec<f64>,
    /// `Λ_{∇·w,K}`: max `C_{∇·w} / √c_wr` over elements touching `K`.
    pub lambda_divw: Vec<f64>,
}

pub fn patch_quantities(mesh: &Triangulation, problem: &ProblemData) -> PatchQuantities {
    let b = |k: usize| problem.bounds(mesh, k);
    let ne = mesh.num_edges();
    let mut q = PatchQuantities {
        lambda_s: Vec::with_capacity(ne),
        lambda_w: Vec::with_capacity(ne),
        peclet_w: Vec::with_capacity(ne),
        cap_lambda_w: Vec::with_capacity(ne),
        lambda_wr: Vec::with_capacity(mesh.num_elements()),
        lambda_divw: Vec::with_capacity(mesh.num_elements()),
    };
    for e in 0..ne {
        let patch = mesh.edge_vertex_patch(e);
        let max = |g: &dyn Fn(usize) -> f64| patch.iter().map(|&k| g(k)).fold(0.0f64, f64::max);
        let ls = max(&|k| b(k).cap_s);
        let lw = max(&|k| over_sqrt_cwr(b(k).cap_w, b(k).c_wr));
        let pw = max(&|k| mesh.elements()[k].diameter * b(k).cap_w / b(k).c_s.sqrt());
        q.lambda_s.push(ls);
        q.lambda_w.push(lw);
        q.peclet_w.push(pw);
        q.cap_lambda_w.push(lw.min(pw));
    }
    for k in 0..mesh.num_elements() {
        let patch = mesh.element_vertex_patch(k);
        q.lambda_wr.push(patch.iter().map(|&l| b(l).c_wr).fold(0.0, f64::max));
        q.lambda_divw
            .push(patch.iter().map(|&l| over_sqrt_cwr(b(l).cap_divw, b(l).c_wr)).fold(0.0, f64::max));
    }
    q
}

//! The three benchmark families with their exact solutions.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::{ElementCoefficients, ProblemData};
use crate::geometry::{Point, Sym2, Vector};
use crate::mesh::{Domain, EdgeKind, Triangulation};
use crate::{Error, Result};

/// Checkerboard diffusion coefficients `S = s_i I` on the four quadrants
/// (counterclockwise from the first) with `p = r^α (a_i sin αθ + b_i cos αθ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KelloggCoefficients {
    pub s: [f64; 4],
    pub alpha: f64,
    pub a: [f64; 4],
    pub b: [f64; 4],
}

pub const KELLOGG_CASE_1: KelloggCoefficients = KelloggCoefficients {
    s: [5.0, 1.0, 5.0, 1.0],
    alpha: 0.53544095,
    a: [0.44721360, -0.74535599, -0.94411759, -2.40170264],
    b: [1.00000000, 2.33333333, 0.55555555, -0.48148148],
};

pub const KELLOGG_CASE_2: KelloggCoefficients = KelloggCoefficients {
    s: [100.0, 1.0, 100.0, 1.0],
    alpha: 0.12690207,
    a: [0.10000000, -9.60396040, -0.48035487, 7.70156488],
    b: [1.00000000, 2.96039604, -0.88275659, -6.45646175],
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KelloggCase {
    One,
    Two,
}

impl KelloggCase {
    pub fn coefficients(self) -> &'static KelloggCoefficients {
        match self {
            KelloggCase::One => &KELLOGG_CASE_1,
            KelloggCase::Two => &KELLOGG_CASE_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Benchmark {
    /// Reentrant corner, `p = ρ^{2/3} sin(2θ/3)`, pure diffusion.
    LShape,
    /// Checkerboard diffusion on `(−1,1)²`.
    Kellogg(KelloggCase),
    /// `S = εI`, `w = (0,1)`, `r = 1` on the unit square with an interior
    /// layer `p = ½(1 − tanh((½ − x)/a))`; Neumann on the top side.
    Layer { eps: f64, a: f64 },
}

impl Benchmark {
    pub fn id(&self) -> &'static str {
        match self {
            Benchmark::LShape => "lshape",
            Benchmark::Kellogg(KelloggCase::One) => "kellogg1",
            Benchmark::Kellogg(KelloggCase::Two) => "kellogg2",
            Benchmark::Layer { .. } => "layer",
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            Benchmark::LShape => Domain::LShape,
            Benchmark::Kellogg(_) => Domain::Square2x2,
            Benchmark::Layer { .. } => Domain::UnitSquare,
        }
    }

    /// Builds the initial mesh, the problem data bound to it and the exact
    /// solution.
    pub fn setup(&self) -> Result<BenchmarkSetup> {
        let mesh = Triangulation::initial(self.domain());
        match *self {
            Benchmark::LShape => {
                let exact = ExactSolution::polar(2.0 / 3.0, [1.0; 4], [0.0; 4], [1.0; 4]);
                let coeffs = vec![ElementCoefficients::diffusion_only(Sym2::IDENTITY); mesh.num_elements()];
                let p = exact.clone();
                let problem = ProblemData::new(
                    coeffs,
                    Arc::new(|_| 0.0),
                    Arc::new(move |x| p.p(x)),
                    Arc::new(|_, _| 0.0),
                )?;
                Ok(BenchmarkSetup { benchmark: *self, mesh, problem, exact })
            }
            Benchmark::Kellogg(case) => {
                let k = case.coefficients();
                let exact = ExactSolution::polar(k.alpha, k.a, k.b, k.s);
                let coeffs = (0..mesh.num_elements())
                    .map(|j| ElementCoefficients::diffusion_only(Sym2::scalar(k.s[quadrant(mesh.barycenter(j))])))
                    .collect();
                let p = exact.clone();
                let problem = ProblemData::new(
                    coeffs,
                    Arc::new(|_| 0.0),
                    Arc::new(move |x| p.p(x)),
                    Arc::new(|_, _| 0.0),
                )?;
                Ok(BenchmarkSetup { benchmark: *self, mesh, problem, exact })
            }
            Benchmark::Layer { eps, a } => {
                if !(eps > 0.0 && eps.is_finite()) {
                    return Err(Error::InvalidParameter(format!("layer ε must be positive, got {eps}")));
                }
                if !(a > 0.0 && a.is_finite()) {
                    return Err(Error::InvalidParameter(format!("layer width a must be positive, got {a}")));
                }
                let mesh = mesh.with_boundary_kinds(|m| if m.y == 1.0 { EdgeKind::Neumann } else { EdgeKind::Dirichlet });
                let coeffs = vec![
                    ElementCoefficients {
                        diffusion: Sym2::scalar(eps),
                        velocity: Vector::new(0.0, 1.0),
                        reaction: 1.0,
                        div_velocity: 0.0,
                    };
                    mesh.num_elements()
                ];
                let exact = ExactSolution::layer(eps, a);
                let p = exact.clone();
                let problem = ProblemData::new(
                    coeffs,
                    Arc::new(move |x| {
                        let (val, _, dxx) = layer_profile(x.x, a);
                        -eps * dxx + val
                    }),
                    Arc::new(move |x| p.p(x)),
                    Arc::new(move |x, n| -eps * layer_profile(x.x, a).1 * n.x),
                )?;
                Ok(BenchmarkSetup { benchmark: *self, mesh, problem, exact })
            }
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Benchmark::Layer { eps, a } => write!(f, "layer(eps={eps}, a={a})"),
            other => f.write_str(other.id()),
        }
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    /// Accepts the ids; `layer` takes default parameters `ε = 0.01`,
    /// `a = 0.05` and is usually configured afterwards.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lshape" => Ok(Benchmark::LShape),
            "kellogg1" => Ok(Benchmark::Kellogg(KelloggCase::One)),
            "kellogg2" => Ok(Benchmark::Kellogg(KelloggCase::Two)),
            "layer" => Ok(Benchmark::Layer { eps: 0.01, a: 0.05 }),
            other => Err(Error::UnknownBenchmark(other.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkSetup {
    pub benchmark: Benchmark,
    pub mesh: Triangulation,
    pub problem: ProblemData,
    pub exact: ExactSolution,
}

/// Exact solution `p` with its gradient; the flux is `u = −S∇p` for the
/// diffusion tensor of the element being evaluated.
#[derive(Debug, Clone)]
pub enum ExactSolution {
    /// `p = r^α (a_i sin αθ + b_i cos αθ)` on quadrant `i`, `θ ∈ [0, 2π)`.
    Polar { alpha: f64, a: [f64; 4], b: [f64; 4], s: [f64; 4] },
    /// `p = ½(1 − tanh((½ − x)/a))`.
    Layer { eps: f64, a: f64 },
}

impl ExactSolution {
    pub fn polar(alpha: f64, a: [f64; 4], b: [f64; 4], s: [f64; 4]) -> Self {
        ExactSolution::Polar { alpha, a, b, s }
    }

    pub fn layer(eps: f64, a: f64) -> Self {
        ExactSolution::Layer { eps, a }
    }

    pub fn p(&self, x: Point) -> f64 {
        match *self {
            ExactSolution::Polar { alpha, a, b, .. } => {
                let r = x.norm();
                if r == 0.0 {
                    return 0.0;
                }
                let theta = angle(x);
                let i = quadrant(x);
                r.powf(alpha) * (a[i] * (alpha * theta).sin() + b[i] * (alpha * theta).cos())
            }
            ExactSolution::Layer { a, .. } => layer_profile(x.x, a).0,
        }
    }

    /// `∇p`; not defined at the origin for the polar family (returns NaN).
    pub fn grad(&self, x: Point) -> Vector {
        match *self {
            ExactSolution::Polar { alpha, a, b, .. } => {
                let r = x.norm();
                if r == 0.0 {
                    return Vector::new(f64::NAN, f64::NAN);
                }
                let theta = angle(x);
                let i = quadrant(x);
                let (s, c) = (alpha * theta).sin_cos();
                let scale = alpha * r.powf(alpha - 1.0);
                let dr = scale * (a[i] * s + b[i] * c);
                let dt = scale * (a[i] * c - b[i] * s);
                let (st, ct) = theta.sin_cos();
                Vector::new(dr * ct - dt * st, dr * st + dt * ct)
            }
            ExactSolution::Layer { a, .. } => Vector::new(layer_profile(x.x, a).1, 0.0),
        }
    }

    /// `u = −S∇p`.
    pub fn flux(&self, x: Point, diffusion: &Sym2) -> Vector {
        -diffusion.apply(self.grad(x))
    }

    /// Diffusion tensor of the exact model at `x` (quadrant lookup for the
    /// polar family).
    pub fn diffusion_at(&self, x: Point) -> Sym2 {
        match *self {
            ExactSolution::Polar { s, .. } => Sym2::scalar(s[quadrant(x)]),
            ExactSolution::Layer { eps, .. } => Sym2::scalar(eps),
        }
    }
}

/// Polar angle in `[0, 2π)`.
fn angle(x: Point) -> f64 {
    let t = x.y.atan2(x.x);
    if t < 0.0 {
        t + 2.0 * PI
    } else {
        t
    }
}

/// Quadrant index 0..4, counterclockwise from the positive x-axis.
pub fn quadrant(x: Point) -> usize {
    ((angle(x) / (0.5 * PI)) as usize).min(3)
}

/// `(p, p_x, p_xx)` of the tanh layer.
pub fn layer_profile(x: f64, a: f64) -> (f64, f64, f64) {
    let t = (0.5 - x) / a;
    let th = t.tanh();
    let sech2 = 1.0 / t.cosh().powi(2);
    (0.5 * (1.0 - th), 0.5 * sech2 / a, sech2 * th / (a * a))
}

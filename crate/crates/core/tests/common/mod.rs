//! Independent reference computations for the integration tests.
//!
//! Nothing here calls the crate's quadrature or basis code: Gauss–Legendre
//! nodes come from Newton iteration on the Legendre recurrence, triangle
//! integrals from a collapsed (Duffy) tensor rule, and RT0 fields from
//! solving the three normal-flux conditions directly.

#![allow(dead_code)]

use std::sync::Arc;

use mixed_afem::assembly::{MixedSolution, Scheme};
use mixed_afem::geometry::{Point, Sym2, Vector};
use mixed_afem::mesh::{Domain, Triangulation};
use mixed_afem::problem::{ElementCoefficients, ProblemData};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// `∫_a^b g ds` with `n` Gauss points.
pub fn segment(a: Point, b: Point, n: usize, mut g: impl FnMut(Point) -> f64) -> f64 {
    let len = a.distance(b);
    gauss_legendre(n)
        .into_iter()
        .map(|(t, w)| {
            let s = 0.5 * (t + 1.0);
            0.5 * w * len * g(a + s * (b - a))
        })
        .sum()
}

/// `∫_K g` over the triangle `p` by the collapsed square rule with `n²`
/// points.
pub fn triangle(p: [Point; 3], n: usize, mut g: impl FnMut(Point) -> f64) -> f64 {
    let rule = gauss_legendre(n);
    let jac = ((p[1] - p[0]).cross(p[2] - p[0])).abs();
    let mut sum = 0.0;
    for &(tu, wu) in &rule {
        let u = 0.5 * (tu + 1.0);
        for &(tv, wv) in &rule {
            let v = 0.5 * (tv + 1.0);
            let (xi, eta) = (u * (1.0 - v), u * v);
            let x = p[0] + xi * (p[1] - p[0]) + eta * (p[2] - p[0]);
            sum += 0.25 * wu * wv * u * g(x);
        }
    }
    sum * jac
}

/// Affine field `a + b x` with prescribed outward fluxes `q[i]` through the
/// edges opposite `p[i]`, found by solving the 3×3 flux conditions.
pub fn rt0_from_fluxes(p: [Point; 3], q: [f64; 3]) -> (Vector, f64) {
    // ∫_σ (a + b x)·n_out = a·N + b (mid·N) with N = (end − start).rot_cw()
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        let (s, e) = (p[(i + 1) % 3], p[(i + 2) % 3]);
        let big_n = Point::new(e.y - s.y, s.x - e.x);
        let mid = 0.5 * (s + e);
        m[i] = [big_n.x, big_n.y, mid.dot(big_n)];
    }
    let x = solve3(m, q);
    (Point::new(x[0], x[1]), x[2])
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(m);
    let mut out = [0.0; 3];
    for c in 0..3 {
        let mut mc = m;
        for r in 0..3 {
            mc[r][c] = b[r];
        }
        out[c] = det(mc) / d;
    }
    out
}

/// Small deterministic generator so oracle sweeps need no extra crates.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Lcg(seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407))
    }

    pub fn uniform(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn index(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }
}

/// Counterclockwise triangle with a minimum angle bounded away from zero.
pub fn random_triangle(rng: &mut Lcg) -> [Point; 3] {
    loop {
        let p = [0, 1, 2].map(|_| Point::new(rng.range(-2.0, 2.0), rng.range(-2.0, 2.0)));
        let area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]);
        let longest = (0..3).map(|i| p[i].distance(p[(i + 1) % 3])).fold(0.0, f64::max);
        if area.abs() > 0.1 * longest * longest {
            return if area > 0.0 { p } else { [p[0], p[2], p[1]] };
        }
    }
}

pub fn random_spd(rng: &mut Lcg) -> Sym2 {
    let (l1, l2) = (rng.range(0.1, 10.0), rng.range(0.1, 10.0));
    let t = rng.range(0.0, std::f64::consts::PI);
    let (c, s) = (t.cos(), t.sin());
    Sym2::new(l1 * c * c + l2 * s * s, (l1 - l2) * c * s, l1 * s * s + l2 * c * c)
}

/// The unit square refined a few times at random, with random anisotropic
/// coefficients on the initial elements, a quadratic source and random
/// discrete fields.
pub struct RandomCase {
    pub mesh: Triangulation,
    pub problem: ProblemData,
    pub solution: MixedSolution,
}

pub fn random_case(seed: u64, convection: bool, scheme: Scheme) -> RandomCase {
    let mut rng = Lcg::new(seed);
    let mut mesh = Triangulation::initial(Domain::UnitSquare);
    let coeffs: Vec<ElementCoefficients> = (0..mesh.num_elements())
        .map(|_| {
            let diffusion = random_spd(&mut rng);
            if convection {
                ElementCoefficients {
                    diffusion,
                    velocity: Point::new(rng.range(-3.0, 3.0), rng.range(-3.0, 3.0)),
                    reaction: rng.range(0.0, 2.0),
                    div_velocity: 0.0,
                }
            } else {
                ElementCoefficients::diffusion_only(diffusion)
            }
        })
        .collect();
    for _ in 0..3 {
        let marked: Vec<usize> = (0..mesh.num_elements()).filter(|_| rng.uniform() < 0.4).collect();
        mesh = mesh.refine(&marked).unwrap();
    }
    let (c0, c1, c2) = (rng.range(-1.0, 1.0), rng.range(-1.0, 1.0), rng.range(-1.0, 1.0));
    let problem = ProblemData::new(
        coeffs,
        Arc::new(move |x: Point| c0 + c1 * x.x * x.y + c2 * x.y * x.y),
        Arc::new(move |x: Point| c1 * x.x - c0 * x.y),
        Arc::new(|_, _| 0.0),
    )
    .unwrap();
    let solution = MixedSolution {
        flux: (0..mesh.num_edges()).map(|_| rng.range(-1.0, 1.0)).collect(),
        pressure: (0..mesh.num_elements()).map(|_| rng.range(-1.0, 1.0)).collect(),
        scheme,
    };
    RandomCase { mesh, problem, solution }
}

/// Outward fluxes of element `k` in local edge order.
pub fn outward_fluxes(mesh: &Triangulation, sol: &MixedSolution, k: usize) -> [f64; 3] {
    let el = &mesh.elements()[k];
    [0, 1, 2].map(|i| el.signs[i] * sol.flux[el.edges[i]])
}

/// Reference `u_h|_K` at `x`.
pub fn field_at(mesh: &Triangulation, sol: &MixedSolution, k: usize, x: Point) -> Vector {
    let (a, b) = rt0_from_fluxes(mesh.element_points(k), outward_fluxes(mesh, sol, k));
    a + b * x
}

/// Reference `‖[γ_t(M u_h)]‖²_σ`, one-sided on the boundary, with `M` the
/// weight of each side.
pub fn jump_sq(mesh: &Triangulation, sol: &MixedSolution, e: usize, weight: impl Fn(usize) -> Sym2) -> f64 {
    let [a, b] = mesh.edge_points(e);
    let t = (1.0 / a.distance(b)) * (b - a);
    let sides: Vec<usize> = mesh.edge_neighbors(e).iter().flatten().copied().collect();
    segment(a, b, 8, |x| {
        let tr = |k: usize| weight(k).apply(field_at(mesh, sol, k, x)).dot(t);
        let j = if sides.len() == 2 { tr(sides[0]) - tr(sides[1]) } else { tr(sides[0]) };
        j * j
    })
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Largest relative discrepancy between crate quantities and the
/// reference computations, per family, over `count` random samples each.
pub fn oracle_discrepancies(count: usize) -> Vec<(&'static str, f64)> {
    use mixed_afem::assembly::local_matrices;
    use mixed_afem::estimators::{hat_hat_p, residual_weights, EstimatorContext};
    use mixed_afem::postprocess::{ptilde, tangential_jump_sq, tangential_jump_sq_scaled};

    let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + a.abs().max(b.abs()));
    let mut rng = Lcg::new(7);

    let mut local = 0.0f64;
    for _ in 0..count {
        let p = random_triangle(&mut rng);
        let signs = [0, 1, 2].map(|_| if rng.uniform() < 0.5 { -1.0 } else { 1.0 });
        let area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]);
        let c = ElementCoefficients {
            diffusion: random_spd(&mut rng),
            velocity: Point::new(rng.range(-2.0, 2.0), rng.range(-2.0, 2.0)),
            reaction: rng.range(0.0, 3.0),
            div_velocity: rng.range(-0.5, 0.5),
        };
        let l = local_matrices(p, signs, area, &c).unwrap();
        let sinv = c.diffusion.inverse().unwrap();
        let basis: Vec<(Vector, f64)> = (0..3)
            .map(|i| {
                let mut q = [0.0; 3];
                q[i] = signs[i];
                rt0_from_fluxes(p, q)
            })
            .collect();
        let eval = |i: usize, x: Point| basis[i].0 + basis[i].1 * x;
        for i in 0..3 {
            for j in 0..3 {
                let m = triangle(p, 6, |x| sinv.apply(eval(i, x)).dot(eval(j, x)));
                local = local.max(rel(l.mass[i][j], m));
            }
            local = local.max(rel(l.div[i], 2.0 * basis[i].1 * area));
            let conv = triangle(p, 6, |x| sinv.apply(eval(i, x)).dot(c.velocity));
            local = local.max(rel(l.conv[i], conv));
        }
        local = local.max(rel(l.react, (c.reaction + c.div_velocity) * triangle(p, 2, |_| 1.0)));
    }

    let mut jumps = 0.0f64;
    let mut estimators = 0.0f64;
    let mut post = 0.0f64;
    let per_case = 10;
    for case in 0..count.div_ceil(per_case) {
        let scheme = if case % 2 == 0 { Scheme::Centered } else { Scheme::Upwind };
        let RandomCase { mesh, problem, solution } = random_case(100 + case as u64, true, scheme);
        let ctx = EstimatorContext::new(&mesh, &problem, &solution).unwrap();
        let flux_sq = |k: usize| {
            let sinv = *problem.inverse_diffusion(&mesh, k);
            triangle(mesh.element_points(k), 6, |x| sinv.apply(field_at(&mesh, &solution, k, x)).norm_sq())
        };
        for _ in 0..per_case {
            let e = rng.index(mesh.num_edges());
            let full = jump_sq(&mesh, &solution, e, |k| *problem.inverse_diffusion(&mesh, k));
            let half = jump_sq(&mesh, &solution, e, |k| problem.inverse_diffusion(&mesh, k).sqrt());
            jumps = jumps.max(rel(tangential_jump_sq(&mesh, &problem, &solution, e), full));
            jumps = jumps.max(rel(tangential_jump_sq_scaled(&mesh, &problem, &solution, e), half));

            let k = rng.index(mesh.num_elements());
            let el = &mesh.elements()[k];
            let pts = mesh.element_points(k);
            let b = problem.bounds(&mesh, k);
            let c = problem.coefficients(&mesh, k);
            let sinv = *problem.inverse_diffusion(&mesh, k);
            let h = el.diameter;
            let fk = flux_sq(k);

            let eta_d = (b.c_wr * h * h * fk).sqrt();
            estimators = estimators.max(rel(ctx.eta_d(k), eta_d));

            let div = ctx.discrete_divergence(k);
            let w = residual_weights(h, b.c_s, b.c_wr, b.cap_wr);
            let pk = solution.pressure[k];
            let res = triangle(pts, 8, |x| {
                let r = problem.source(x) - div + sinv.apply(field_at(&mesh, &solution, k, x)).dot(c.velocity)
                    - (c.reaction + c.div_velocity) * pk;
                r * r
            });
            let eta_r = (w.alpha * w.alpha * res + w.beta * w.beta * fk).sqrt();
            estimators = estimators.max(rel(ctx.eta_r(k), eta_r));

            let delta = |e: usize| if mesh.edges()[e].kind.is_boundary() { 1.0 } else { 0.5 };
            let sinv_of = |l: usize| *problem.inverse_diffusion(&mesh, l);
            let mut nc = ctx.patch.lambda_wr[k] * h * h * fk;
            let mut cc = ctx.patch.lambda_divw[k].powi(2) * h * h * fk;
            let mut u = 0.0;
            for i in 0..3 {
                let e = el.edges[i];
                let len = mesh.edges()[e].length;
                let j = jump_sq(&mesh, &solution, e, sinv_of);
                nc += delta(e) * ctx.patch.lambda_s[e] * len * j;
                cc += delta(e) * ctx.patch.cap_lambda_w[e].powi(2) * len * j;
                let wn = c.velocity.dot(mesh.edges()[e].normal);
                let hh = hat_hat_p(&mesh, &problem, &solution, k, i);
                let patch: f64 = mesh.edge_neighbors(e).iter().flatten().map(|&l| flux_sq(l)).sum();
                u += wn * wn * (hh * hh * len + len * patch);
            }
            estimators = estimators.max(rel(ctx.eta_nc(k), nc.sqrt()));
            estimators = estimators.max(rel(ctx.eta_c(k), cc.sqrt()));
            if scheme == Scheme::Upwind {
                estimators = estimators.max(rel(ctx.eta_u(k).unwrap(), (h / b.c_s * u).sqrt()));
            }

            let q = ptilde(&mesh, &problem, &solution, k);
            post = post.max(rel(triangle(pts, 4, |x| q.eval(x)) / el.area, pk));
            for _ in 0..3 {
                let (l1, l2) = (rng.uniform(), rng.uniform());
                let (l1, l2) = if l1 + l2 > 1.0 { (1.0 - l1, 1.0 - l2) } else { (l1, l2) };
                let x = pts[0] + l1 * (pts[1] - pts[0]) + l2 * (pts[2] - pts[0]);
                let g = -1.0 * sinv.apply(field_at(&mesh, &solution, k, x));
                post = post.max((q.grad(x) - g).norm() / (1.0 + g.norm()));
            }
        }
    }
    vec![
        ("local matrices", local),
        ("tangential jumps", jumps),
        ("estimator integrals", estimators),
        ("postprocessed scalar", post),
    ]
}

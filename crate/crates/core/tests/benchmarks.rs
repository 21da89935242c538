//! Benchmark problems end to end on small meshes: exact solutions, the
//! scheme identities after a solve, the loop and the CLI artifacts.

mod common;

use mixed_afem::adapt::{adaptive_loop, LoopConfig, Mode, StopReason};
use mixed_afem::assembly::{assemble, Scheme};
use mixed_afem::cli::{execute, history_csv, RunConfig, HISTORY_HEADER};
use mixed_afem::estimators::{estimate, Policy};
use mixed_afem::geometry::{Point, Vector};
use mixed_afem::postprocess::{edge_mean_jumps, identity_defects, ptilde_all};
use mixed_afem::problem::{Benchmark, KelloggCase};
use mixed_afem::solver::solve;
use mixed_afem::verify::{local_conservation_defect, quadrant_violations};

const ALL: [Benchmark; 4] = [
    Benchmark::LShape,
    Benchmark::Kellogg(KelloggCase::One),
    Benchmark::Kellogg(KelloggCase::Two),
    Benchmark::Layer { eps: 0.01, a: 0.05 },
];

/// `−∇·(S∇p) + ∇·(pw) + rp − f` by central differences.
fn pde_residual(b: Benchmark, x: Point, h: f64) -> (f64, f64) {
    let setup = b.setup().unwrap();
    let ex = &setup.exact;
    let s = ex.diffusion_at(x).xx;
    let p = |dx: f64, dy: f64| ex.p(Point::new(x.x + dx, x.y + dy));
    let pxx = (p(h, 0.0) + p(-h, 0.0) - 2.0 * p(0.0, 0.0)) / (h * h);
    let pyy = (p(0.0, h) + p(0.0, -h) - 2.0 * p(0.0, 0.0)) / (h * h);
    let (w, r) = match b {
        Benchmark::Layer { .. } => (Vector::new(0.0, 1.0), 1.0),
        _ => (Vector::ZERO, 0.0),
    };
    let g = ex.grad(x);
    let f = setup.problem.source(x);
    let terms = [s * pxx, s * pyy, w.dot(g), r * p(0.0, 0.0), f];
    (-terms[0] - terms[1] + terms[2] + terms[3] - terms[4], terms.iter().map(|t| t.abs()).fold(1.0, f64::max))
}

#[test]
fn exact_solutions_satisfy_the_equation() {
    let mut rng = common::Lcg::new(5);
    for b in ALL {
        for _ in 0..40 {
            let x = loop {
                let x = match b {
                    Benchmark::Layer { .. } => Point::new(rng.range(0.05, 0.95), rng.range(0.05, 0.95)),
                    _ => Point::new(rng.range(-0.95, 0.95), rng.range(-0.95, 0.95)),
                };
                // away from the interfaces and the singular corner
                let inside = !matches!(b, Benchmark::LShape) || !(x.x > 0.0 && x.y < 0.0);
                if x.x.abs() > 0.05 && x.y.abs() > 0.05 && inside {
                    break x;
                }
            };
            let (res, scale) = pde_residual(b, x, 1e-4);
            assert!(res.abs() < 1e-4 * scale, "{b} at {x:?}: residual {res:e} (scale {scale:e})");
        }
    }
}

#[test]
fn kellogg_normal_flux_is_continuous() {
    for case in [KelloggCase::One, KelloggCase::Two] {
        let setup = Benchmark::Kellogg(case).setup().unwrap();
        let ex = &setup.exact;
        let d = 1e-12;
        for t in [0.1, 0.3, 0.55, 0.9] {
            for (on, n) in [
                (Point::new(t, 0.0), Vector::new(0.0, 1.0)),
                (Point::new(-t, 0.0), Vector::new(0.0, 1.0)),
                (Point::new(0.0, t), Vector::new(1.0, 0.0)),
                (Point::new(0.0, -t), Vector::new(1.0, 0.0)),
            ] {
                let (a, b) = (on + d * n, on - d * n);
                let (ua, ub) = (ex.flux(a, &ex.diffusion_at(a)), ex.flux(b, &ex.diffusion_at(b)));
                let (na, nb) = (ua.dot(n), ub.dot(n));
                assert!((na - nb).abs() <= 1e-5 * na.abs().max(nb.abs()), "{case:?} at {on:?}: {na} vs {nb}");
                // the tangential part of ∇p jumps with the coefficient
                let tan = Vector::new(n.y, -n.x);
                let (ga, gb) = (ex.grad(a).dot(tan), ex.grad(b).dot(tan));
                assert!((ga - gb).abs() < 1e-5 * ga.abs().max(1.0));
            }
        }
    }
}

#[test]
fn discrete_identities_hold_after_solve() {
    for b in ALL {
        let setup = b.setup().unwrap();
        let mut mesh = setup.mesh.clone();
        for _ in 0..3 {
            for scheme in [Scheme::Centered, Scheme::Upwind] {
                let sol = solve(&assemble(&mesh, &setup.problem, scheme).unwrap()).unwrap();
                let defect = local_conservation_defect(&mesh, &setup.problem, &sol);
                assert!(defect <= 1e-9, "{b} {scheme}: conservation defect {defect:e}");
                let (grad, mean) = identity_defects(&mesh, &setup.problem, &sol);
                assert!(grad <= 1e-12 && mean <= 1e-12, "{b} {scheme}: {grad:e} {mean:e}");
            }
            mesh = mesh.uniform_refine().unwrap();
        }
    }
}

#[test]
fn pure_diffusion_divergence_equals_source_mean() {
    let setup = Benchmark::LShape.setup().unwrap();
    let mesh = setup.mesh.uniform_refine().unwrap().uniform_refine().unwrap();
    let sol = solve(&assemble(&mesh, &setup.problem, Scheme::Centered).unwrap()).unwrap();
    for k in 0..mesh.num_elements() {
        assert!(sol.field(&mesh, k).divergence().abs() < 1e-12);
    }
    // the postprocessed scalar has continuous edge means
    let q = ptilde_all(&mesh, &setup.problem, &sol);
    let scale = sol.pressure.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for (e, j) in edge_mean_jumps(&mesh, &q).into_iter().enumerate() {
        assert!(j.abs() <= 1e-8 * scale * mesh.edges()[e].length, "edge {e}: {j:e}");
    }
}

#[test]
fn kellogg_meshes_respect_the_quadrants() {
    let setup = Benchmark::Kellogg(KelloggCase::One).setup().unwrap();
    let config = LoopConfig {
        scheme: Scheme::Centered,
        policy: Policy::Xi,
        theta: 0.7,
        mode: Mode::Adaptive,
        max_dof: 2000,
        max_iter: 100,
    };
    let out = adaptive_loop(setup.mesh, &setup.problem, Some(&setup.exact), &config).unwrap();
    assert_eq!(out.stop, StopReason::MaxDof);
    assert!(quadrant_violations(&out.mesh).is_empty());
    for w in out.records.windows(2) {
        assert!(w[1].dof > w[0].dof);
        assert_eq!(w[1].k, w[0].k + 1);
    }
}

#[test]
fn lshape_error_decreases_monotonically() {
    let setup = Benchmark::LShape.setup().unwrap();
    let config = LoopConfig {
        scheme: Scheme::Centered,
        policy: Policy::Theorem,
        theta: 0.5,
        mode: Mode::Adaptive,
        max_dof: 3000,
        max_iter: 200,
    };
    let out = adaptive_loop(setup.mesh, &setup.problem, Some(&setup.exact), &config).unwrap();
    let errors: Vec<f64> = out.records.iter().map(|r| r.error.unwrap()).collect();
    // one coarse-mesh step (12 -> 14 elements) raises E by 1.3%; from 16
    // elements on the decay is monotone
    for (w, r) in errors.windows(2).zip(&out.records).skip(2) {
        let slack = if r.dof < 16 { 0.02 } else { 0.0 };
        assert!(w[1] <= w[0] * (1.0 + slack), "error grew at {} elements: {} -> {}", r.dof, w[0], w[1]);
    }
    // reliability with a stable constant
    let c: Vec<f64> = out.records.iter().map(|r| r.error.unwrap() / r.eta).collect();
    let (lo, hi) = c.iter().fold((f64::MAX, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi / lo <= 5.0, "C_rel ranges over [{lo}, {hi}]");
}

#[test]
fn estimator_policies_differ_only_in_the_total() {
    let setup = Benchmark::Kellogg(KelloggCase::One).setup().unwrap();
    let sol = solve(&assemble(&setup.mesh, &setup.problem, Scheme::Centered).unwrap()).unwrap();
    let t = estimate(&setup.mesh, &setup.problem, &sol, Policy::Theorem).unwrap();
    let x = estimate(&setup.mesh, &setup.problem, &sol, Policy::Xi).unwrap();
    for (a, b) in t.per_element.iter().zip(&x.per_element) {
        assert_eq!((a.eta_nc, a.xi), (b.eta_nc, b.xi));
        assert_eq!(b.total, b.xi);
    }
}

#[test]
fn run_writes_artifacts_with_stable_schema() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = RunConfig::defaults(Benchmark::Layer { eps: 0.1, a: 0.1 });
    config.max_dof = 300;
    config.out = dir.path().join("layer");
    let out = execute(&config, false).unwrap();
    for f in ["config.txt", "history.csv", "estimators.csv", "mesh_final.txt", "mesh_final.svg", "ptilde_nodal.csv"] {
        assert!(config.out.join(f).exists(), "missing {f}");
    }
    let history = std::fs::read_to_string(config.out.join("history.csv")).unwrap();
    let mut lines = history.lines();
    assert_eq!(lines.next(), Some(HISTORY_HEADER));
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), HISTORY_HEADER.split(',').count());
        for c in cells {
            assert!(c == "nan" || c.parse::<f64>().is_ok(), "cell `{c}`");
        }
    }
    assert_eq!(history, history_csv(&out.records));
    assert_eq!(RunConfig::parse(&std::fs::read_to_string(config.out.join("config.txt")).unwrap()).unwrap(), config);
    let mesh = mixed_afem::mesh::Triangulation::from_dump(&std::fs::read_to_string(config.out.join("mesh_final.txt")).unwrap()).unwrap();
    assert_eq!(mesh.num_elements(), out.mesh.num_elements());
    let nodal = std::fs::read_to_string(config.out.join("ptilde_nodal.csv")).unwrap();
    assert_eq!(nodal.lines().count(), out.mesh.num_vertices() + 1);
}

#[test]
fn uniform_mode_doubles_the_element_count() {
    let setup = Benchmark::LShape.setup().unwrap();
    let config = LoopConfig {
        scheme: Scheme::Centered,
        policy: Policy::Theorem,
        theta: 0.5,
        mode: Mode::Uniform,
        max_dof: 10_000,
        max_iter: 5,
    };
    let out = adaptive_loop(setup.mesh, &setup.problem, Some(&setup.exact), &config).unwrap();
    assert_eq!(out.stop, StopReason::MaxIterations);
    for w in out.records.windows(2) {
        assert_eq!(w[1].dof, 2 * w[0].dof);
    }
}

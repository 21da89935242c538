//! Quadrature, the true error in the weighted energy norm, convergence
//! rates and effectivity indices.

pub mod quadrature;

use rayon::prelude::*;

use crate::assembly::{source_integral, upwind_face, upwind_value, MixedSolution, Scheme};
use crate::geometry::Point;
use crate::mesh::Triangulation;
use crate::problem::{quadrant, ExactSolution, ProblemData};
use quadrature::rules;

/// `E` and the elementwise contributions `E_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyError {
    pub total: f64,
    pub per_element: Vec<f64>,
}

/// `E_K² = ‖S^{-1/2}(u − u_h)‖²_K + c_{w,r,K}‖p − p_h‖²_K`, both terms with
/// the seven-point rule and `u = −S_K∇p`.
pub fn energy_error(mesh: &Triangulation, problem: &ProblemData, exact: &ExactSolution, sol: &MixedSolution) -> EnergyError {
    let rule = &rules().seven;
    let squares: Vec<f64> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|k| {
            let s = problem.coefficients(mesh, k).diffusion;
            let sinv = problem.inverse_diffusion(mesh, k);
            let c_wr = problem.bounds(mesh, k).c_wr;
            let uh = sol.field(mesh, k);
            let pk = sol.pressure[k];
            let area = mesh.elements()[k].area;
            rule.map(mesh.element_points(k))
                .filter(|(x, _)| x.norm() > 0.0)
                .map(|(x, w)| {
                    let d = exact.flux(x, &s) - uh.eval(x);
                    let dp = exact.p(x) - pk;
                    w * area * (sinv.quad_form(d, d) + c_wr * dp * dp)
                })
                .sum::<f64>()
        })
        .collect();
    let total = squares.iter().sum::<f64>().sqrt();
    EnergyError { total, per_element: squares.into_iter().map(f64::sqrt).collect() }
}

/// `max_K |c_K| / (1 + |∫_K f|)`, where `c_K` is the element balance of the
/// computed fields: `∫_K R_K` for the centered scheme and
/// `∫_K ∇·u_h + Σ_σ p̂_σ w_{K,σ} + r_K p_K |K| − ∫_K f` for the upwind one.
pub fn local_conservation_defect(mesh: &Triangulation, problem: &ProblemData, sol: &MixedSolution) -> f64 {
    (0..mesh.num_elements())
        .into_par_iter()
        .map(|k| {
            let area = mesh.elements()[k].area;
            let c = problem.coefficients(mesh, k);
            let u = sol.field(mesh, k);
            let p_k = sol.pressure[k];
            let f = source_integral(mesh, problem, k);
            let balance = match sol.scheme {
                Scheme::Centered => {
                    let sinv = problem.inverse_diffusion(mesh, k);
                    let conv = rules().seven.integrate(mesh.element_points(k), area, |x| sinv.apply(u.eval(x)).dot(c.velocity));
                    f - u.divergence() * area + conv - (c.reaction + c.div_velocity) * p_k * area
                }
                Scheme::Upwind => {
                    let convective: f64 = (0..3)
                        .map(|i| upwind_face(mesh, problem, k, i).w_ks * upwind_value(mesh, problem, sol, k, i))
                        .sum();
                    u.divergence() * area + convective + c.reaction * p_k * area - f
                }
            };
            balance.abs() / (1.0 + f.abs())
        })
        .reduce(|| 0.0, f64::max)
}

/// `log(v_{k−1}/v_k) / log(N_k/N_{k−1})` for consecutive entries; `None`
/// where a value is not positive or the count did not grow.
pub fn eoc(values: &[f64], dofs: &[usize]) -> Vec<Option<f64>> {
    assert_eq!(values.len(), dofs.len());
    values
        .windows(2)
        .zip(dofs.windows(2))
        .map(|(v, n)| {
            let ok = v[0] > 0.0 && v[1] > 0.0 && v.iter().all(|x| x.is_finite()) && n[1] > n[0];
            ok.then(|| (v[0] / v[1]).ln() / (n[1] as f64 / n[0] as f64).ln())
        })
        .collect()
}

/// `η_k / E_k`; `None` where `E_k` is not positive.
pub fn effectivity(eta: &[f64], error: &[f64]) -> Vec<Option<f64>> {
    eta.iter()
        .zip(error)
        .map(|(&h, &e)| (e > 0.0 && e.is_finite() && h.is_finite()).then(|| h / e))
        .collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Elements that straddle a quadrant boundary, i.e. whose vertices do not
/// all lie in the closed quadrant of the barycenter. Empty for meshes that
/// respect the axes.
pub fn quadrant_violations(mesh: &Triangulation) -> Vec<usize> {
    let inside = |q: usize, p: Point| match q {
        0 => p.x >= 0.0 && p.y >= 0.0,
        1 => p.x <= 0.0 && p.y >= 0.0,
        2 => p.x <= 0.0 && p.y <= 0.0,
        _ => p.x >= 0.0 && p.y <= 0.0,
    };
    (0..mesh.num_elements())
        .filter(|&k| {
            let q = quadrant(mesh.barycenter(k));
            !mesh.element_points(k).iter().all(|&p| inside(q, p))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eoc_examples() {
        let r = eoc(&[1.0, 0.5], &[100, 400]);
        assert!((r[0].unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(eoc(&[2.0, 2.0], &[10, 20])[0], Some(0.0));
        let r = eoc(&[1.3665, 1.1346], &[8, 20]);
        assert!((r[0].unwrap() - 0.2030).abs() < 5e-5);
        assert_eq!(eoc(&[0.0, 1.0], &[1, 2]), vec![None]);
        assert_eq!(eoc(&[1.0, 1.0], &[2, 2]), vec![None]);
    }

    #[test]
    fn effectivity_examples() {
        let r = effectivity(&[5.0938, 2.0], &[1.3665, 2.0]);
        assert!((r[0].unwrap() - 3.728).abs() < 1e-3);
        assert_eq!(r[1], Some(1.0));
        assert_eq!(effectivity(&[1.0], &[0.0]), vec![None]);
    }

    #[test]
    fn slope_of_power_law() {
        let x = [10.0, 100.0, 1000.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
        assert!((loglog_slope(&x, &y) + 0.5).abs() < 1e-14);
    }
}

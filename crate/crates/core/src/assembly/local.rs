//! Element-level RT0 quantities.

use crate::geometry::{Point, Vector};
use crate::problem::ElementCoefficients;
use crate::verify::quadrature::rules;
use crate::{Error, Result};

/// Affine RT0 field `u(x) = a + b x` on one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rt0Field {
    pub a: Vector,
    pub b: f64,
}

impl Rt0Field {
    pub const ZERO: Rt0Field = Rt0Field { a: Vector::ZERO, b: 0.0 };

    pub fn eval(&self, x: Point) -> Vector {
        self.a + self.b * x
    }

    pub fn divergence(&self) -> f64 {
        2.0 * self.b
    }
}

/// Field of the global basis function of local edge `i` restricted to the
/// element: `s_i/(2|K|) (x − P_i)` with `P_i` the vertex opposite the edge.
pub fn basis_function(points: [Point; 3], signs: [f64; 3], area: f64, i: usize) -> Rt0Field {
    let c = signs[i] / (2.0 * area);
    Rt0Field { a: -c * points[i], b: c }
}

/// Field with the given edge fluxes (global orientation, local edge order).
pub fn rt0_field(points: [Point; 3], signs: [f64; 3], area: f64, dofs: [f64; 3]) -> Rt0Field {
    let mut f = Rt0Field::ZERO;
    for i in 0..3 {
        let c = dofs[i] * signs[i] / (2.0 * area);
        f.a = f.a - c * points[i];
        f.b += c;
    }
    f
}

/// Element matrices of both schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalMatrices {
    /// `∫_K S⁻¹ψ_i · ψ_j`.
    pub mass: [[f64; 3]; 3],
    /// `∫_K ∇·ψ_i = s_i`.
    pub div: [f64; 3],
    /// `∫_K (S⁻¹ψ_i) · w`.
    pub conv: [f64; 3],
    /// `(r + ∇·w) |K|`.
    pub react: f64,
}

pub fn local_matrices(points: [Point; 3], signs: [f64; 3], area: f64, coeffs: &ElementCoefficients) -> Result<LocalMatrices> {
    if !(area > 0.0) {
        return Err(Error::DegenerateElement { element: usize::MAX, area });
    }
    let sinv = coeffs
        .diffusion
        .inverse()
        .ok_or_else(|| Error::InvalidCoefficients("singular diffusion tensor".into()))?;
    let basis = [0, 1, 2].map(|i| basis_function(points, signs, area, i));

    let mut mass = [[0.0; 3]; 3];
    for (x, w) in rules().midpoint3.map(points) {
        let phi = basis.map(|b| b.eval(x));
        for i in 0..3 {
            let sp = sinv.apply(phi[i]);
            for j in i..3 {
                mass[i][j] += w * area * sp.dot(phi[j]);
            }
        }
    }
    for i in 0..3 {
        for j in 0..i {
            mass[i][j] = mass[j][i];
        }
    }

    // ∫_K ψ_i = s_i/2 (x_c − P_i); w is constant
    let centroid = crate::geometry::barycenter(points);
    let sw = sinv.apply(coeffs.velocity);
    let conv = [0, 1, 2].map(|i| 0.5 * signs[i] * sw.dot(centroid - points[i]));

    Ok(LocalMatrices {
        mass,
        div: signs,
        conv,
        react: (coeffs.reaction + coeffs.div_velocity) * area,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Sym2;

    fn reference() -> ([Point; 3], f64) {
        ([Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)], 0.5)
    }

    #[test]
    fn basis_has_unit_flux_on_own_edge() {
        let (p, area) = reference();
        let signs = [1.0, -1.0, 1.0];
        for i in 0..3 {
            let f = basis_function(p, signs, area, i);
            for j in 0..3 {
                let (a, b) = (p[(j + 1) % 3], p[(j + 2) % 3]);
                let outward = (b - a).rot_cw();
                // ∫_σ v·n_out = (v(mid)·n̂) |σ| for affine v; (b−a).rot_cw() has length |σ|
                let flux = f.eval(a.midpoint(b)).dot(outward);
                let expected = if i == j { signs[i] } else { 0.0 };
                assert!((flux - expected).abs() < 1e-15, "i={i} j={j} flux={flux}");
            }
            assert!((f.divergence() * area - signs[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_velocity_has_no_convection() {
        let (p, area) = reference();
        let l = local_matrices(p, [1.0; 3], area, &ElementCoefficients::diffusion_only(Sym2::IDENTITY)).unwrap();
        assert_eq!(l.conv, [0.0; 3]);
        assert_eq!(l.div, [1.0; 3]);
        assert_eq!(l.react, 0.0);
    }

    #[test]
    fn degenerate_rejected() {
        let p = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0)];
        assert!(local_matrices(p, [1.0; 3], 0.0, &ElementCoefficients::diffusion_only(Sym2::IDENTITY)).is_err());
    }
}

//! Quadrature on triangles (barycentric points) and on edges.

use std::sync::OnceLock;

use crate::geometry::Point;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub name: &'static str,
    /// Barycentric coordinates `(λ₀, λ₁, λ₂)`.
    pub points: Vec<[f64; 3]>,
    /// Weights summing to one; multiply by `|K|` on use.
    pub weights: Vec<f64>,
    pub degree: u32,
}

impl QuadratureRule {
    /// Edge-midpoint rule, exact for quadratics.
    pub fn midpoint3() -> Self {
        Self {
            name: "edge-midpoint-3",
            points: vec![[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]],
            weights: vec![1.0 / 3.0; 3],
            degree: 2,
        }
    }

    /// Seven-point degree-5 rule: centroid plus two three-point orbits.
    pub fn seven_point() -> Self {
        let s15 = 15f64.sqrt();
        let a1 = (6.0 - s15) / 21.0;
        let a2 = (6.0 + s15) / 21.0;
        let w1 = (155.0 - s15) / 1200.0;
        let w2 = (155.0 + s15) / 1200.0;
        let orbit = |a: f64| [[1.0 - 2.0 * a, a, a], [a, 1.0 - 2.0 * a, a], [a, a, 1.0 - 2.0 * a]];
        let mut points = vec![[1.0 / 3.0; 3]];
        points.extend(orbit(a1));
        points.extend(orbit(a2));
        Self {
            name: "seven-point",
            points,
            weights: vec![9.0 / 40.0, w1, w1, w1, w2, w2, w2],
            degree: 5,
        }
    }

    /// Physical quadrature points of the triangle `p`.
    pub fn map(&self, p: [Point; 3]) -> impl Iterator<Item = (Point, f64)> + '_ {
        self.points.iter().zip(&self.weights).map(move |(l, &w)| {
            let x = l[0] * p[0].x + l[1] * p[1].x + l[2] * p[2].x;
            let y = l[0] * p[0].y + l[1] * p[1].y + l[2] * p[2].y;
            (Point::new(x, y), w)
        })
    }

    /// `∫_K g` for the triangle `p` of area `area`.
    pub fn integrate<F: FnMut(Point) -> f64>(&self, p: [Point; 3], area: f64, mut g: F) -> f64 {
        area * self.map(p).map(|(x, w)| w * g(x)).sum::<f64>()
    }

    /// Checks the weight sum and exactness for every monomial `x^i y^j`,
    /// `i + j ≤ degree`, on the reference triangle.
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-14 {
            return Err(Error::Quadrature { name: self.name, i: 0, j: 0, error: sum - 1.0 });
        }
        let reference = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        for total in 0..=self.degree {
            for i in 0..=total {
                let j = total - i;
                let approx = self.integrate(reference, 0.5, |p| p.x.powi(i as i32) * p.y.powi(j as i32));
                let exact = reference_monomial_integral(i, j);
                let error = (approx - exact).abs();
                if error > 1e-14 {
                    return Err(Error::Quadrature { name: self.name, i, j, error });
                }
            }
        }
        Ok(())
    }
}

/// `∫ x^i y^j` over the reference triangle `(0,0),(1,0),(0,1)`: `i! j! / (i+j+2)!`.
pub fn reference_monomial_integral(i: u32, j: u32) -> f64 {
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    fact(i) * fact(j) / fact(i + j + 2)
}

/// Validated rules shared across the crate.
pub struct Rules {
    pub midpoint3: QuadratureRule,
    pub seven: QuadratureRule,
}

pub fn rules() -> &'static Rules {
    static RULES: OnceLock<Rules> = OnceLock::new();
    RULES.get_or_init(|| {
        let rules = Rules { midpoint3: QuadratureRule::midpoint3(), seven: QuadratureRule::seven_point() };
        for r in [&rules.midpoint3, &rules.seven] {
            if let Err(e) = r.validate() {
                panic!("built-in quadrature failed validation: {e}");
            }
        }
        rules
    })
}

/// Gauss–Legendre rule on `[0, 1]`: `(abscissa, weight)` pairs.
pub fn gauss_unit(n: usize) -> &'static [(f64, f64)] {
    static G2: OnceLock<[(f64, f64); 2]> = OnceLock::new();
    static G3: OnceLock<[(f64, f64); 3]> = OnceLock::new();
    match n {
        2 => G2.get_or_init(|| {
            let d = 0.5 / 3f64.sqrt();
            [(0.5 - d, 0.5), (0.5 + d, 0.5)]
        }),
        3 => G3.get_or_init(|| {
            let d = 0.5 * (0.6f64).sqrt();
            [(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
        }),
        _ => panic!("no {n}-point edge rule"),
    }
}

/// `∫_{a}^{b} g ds` along a straight segment with an `n`-point Gauss rule.
pub fn integrate_segment<F: FnMut(Point) -> f64>(a: Point, b: Point, n: usize, mut g: F) -> f64 {
    let len = a.distance(b);
    len * gauss_unit(n)
        .iter()
        .map(|&(t, w)| w * g(a + t * (b - a)))
        .sum::<f64>()
}

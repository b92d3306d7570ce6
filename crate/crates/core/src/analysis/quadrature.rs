//! Symmetric quadrature on triangles.

use crate::mesh::Point;

/// Rule on the reference triangle given in barycentric coordinates. Weights
/// sum to one and are multiplied by the element area on use.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleQuadrature {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TriangleQuadrature {
    /// Radon's 7-point rule, exact for polynomials of degree 5.
    pub fn degree5() -> Self {
        let s = 15f64.sqrt();
        let a1 = (6.0 - s) / 21.0;
        let a2 = (6.0 + s) / 21.0;
        let w1 = (155.0 - s) / 1200.0;
        let w2 = (155.0 + s) / 1200.0;
        let third = 1.0 / 3.0;
        let orbit = |a: f64| [[a, a, 1.0 - 2.0 * a], [a, 1.0 - 2.0 * a, a], [1.0 - 2.0 * a, a, a]];
        let mut points = vec![[third; 3]];
        points.extend(orbit(a1));
        points.extend(orbit(a2));
        let weights = vec![9.0 / 40.0, w1, w1, w1, w2, w2, w2];
        Self {
            points,
            weights,
            degree: 5,
        }
    }

    /// Physical points and area-scaled weights on the triangle `v`.
    pub fn on(&self, v: [Point; 3], area: f64) -> impl Iterator<Item = (Point, [f64; 3], f64)> + '_ {
        self.points.iter().zip(&self.weights).map(move |(l, &w)| {
            let x = [
                l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
                l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
            ];
            (x, *l, w * area)
        })
    }

    /// `∫_T g` for the triangle `v` of the given area.
    pub fn integrate(&self, v: [Point; 3], area: f64, g: impl Fn(Point) -> f64) -> f64 {
        self.on(v, area).map(|(x, _, w)| w * g(x)).sum()
    }
}

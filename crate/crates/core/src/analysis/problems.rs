//! Manufactured problems with known exact solutions.
//!
//! A problem is specified by its exact solution (value, gradient, Hessian,
//! time derivative) and constant coefficients. The load, the Dirichlet trace
//! and the Neumann flux are derived from these:
//!
//! ```text
//! f = u_t - div(A grad u) + p . grad u + delta u
//! g = (A grad u + u p) . nu
//! ```

use crate::assembly::ProblemCoefficients;
use crate::error::{Error, Result};
use crate::mesh::Point;

/// Names accepted by [`ManufacturedProblem::by_name`].
pub const PROBLEM_NAMES: [&str; 2] = ["elliptic-poly", "parabolic-poly"];

/// Smooth exact solution `u(x, t)` with the derivatives needed by the method.
#[derive(Clone, Copy)]
pub struct ExactSolution {
    pub value: fn(Point, f64) -> f64,
    pub gradient: fn(Point, f64) -> [f64; 2],
    pub hessian: fn(Point, f64) -> [[f64; 2]; 2],
    pub time_derivative: fn(Point, f64) -> f64,
}

#[derive(Clone)]
pub struct ManufacturedProblem {
    name: String,
    exact: ExactSolution,
    coeffs: ProblemCoefficients,
    transient: bool,
}

impl std::fmt::Debug for ManufacturedProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedProblem")
            .field("name", &self.name)
            .field("coeffs", &self.coeffs)
            .field("transient", &self.transient)
            .finish()
    }
}

fn bubble(x: Point) -> f64 {
    (x[0] - x[0] * x[0]) * (x[1] - x[1] * x[1])
}

fn bubble_gradient(x: Point) -> [f64; 2] {
    let (a, b) = (x[0] - x[0] * x[0], x[1] - x[1] * x[1]);
    [(1.0 - 2.0 * x[0]) * b, a * (1.0 - 2.0 * x[1])]
}

fn bubble_hessian(x: Point) -> [[f64; 2]; 2] {
    let (a, b) = (x[0] - x[0] * x[0], x[1] - x[1] * x[1]);
    let cross = (1.0 - 2.0 * x[0]) * (1.0 - 2.0 * x[1]);
    [[-2.0 * b, cross], [cross, -2.0 * a]]
}

/// `u = (x - x²)(y - y²)`.
pub const STATIONARY_BUBBLE: ExactSolution = ExactSolution {
    value: |x, _| bubble(x),
    gradient: |x, _| bubble_gradient(x),
    hessian: |x, _| bubble_hessian(x),
    time_derivative: |_, _| 0.0,
};

/// `u = t (x - x²)(y - y²)`.
pub const GROWING_BUBBLE: ExactSolution = ExactSolution {
    value: |x, t| t * bubble(x),
    gradient: |x, t| bubble_gradient(x).map(|g| t * g),
    hessian: |x, t| bubble_hessian(x).map(|r| r.map(|h| t * h)),
    time_derivative: |x, _| bubble(x),
};

impl ManufacturedProblem {
    /// Builds a problem and checks the supplied derivatives against finite
    /// differences of the solution.
    pub fn new(name: impl Into<String>, exact: ExactSolution, coeffs: ProblemCoefficients, transient: bool) -> Result<Self> {
        let p = Self {
            name: name.into(),
            exact,
            coeffs,
            transient,
        };
        p.check_consistency()?;
        Ok(p)
    }

    /// Looks up a registered problem. Both use `A = I`, `p = (1, 1)`,
    /// `delta = 1` on the unit square.
    pub fn by_name(name: &str) -> Result<Self> {
        let coeffs = ProblemCoefficients::new([[1.0, 0.0], [0.0, 1.0]], [1.0, 1.0], 1.0)?;
        match name {
            "elliptic-poly" => Self::new(name, STATIONARY_BUBBLE, coeffs, false),
            "parabolic-poly" => Self::new(name, GROWING_BUBBLE, coeffs, true),
            _ => Err(Error::UnknownProblem(name.to_string())),
        }
    }

    /// Same exact solution with different coefficients; the load and flux
    /// follow automatically.
    pub fn with_coefficients(mut self, coeffs: ProblemCoefficients) -> Self {
        self.coeffs = coeffs;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn coeffs(&self) -> &ProblemCoefficients {
        &self.coeffs
    }

    pub fn is_transient(&self) -> bool {
        self.transient
    }

    pub fn u(&self, x: Point, t: f64) -> f64 {
        (self.exact.value)(x, t)
    }

    pub fn grad_u(&self, x: Point, t: f64) -> [f64; 2] {
        (self.exact.gradient)(x, t)
    }

    pub fn f(&self, x: Point, t: f64) -> f64 {
        let c = &self.coeffs;
        let a = c.a();
        let h = (self.exact.hessian)(x, t);
        let div = a[0][0] * h[0][0] + a[0][1] * h[1][0] + a[1][0] * h[0][1] + a[1][1] * h[1][1];
        let g = self.grad_u(x, t);
        let ut = if self.transient {
            (self.exact.time_derivative)(x, t)
        } else {
            0.0
        };
        ut - div + c.p()[0] * g[0] + c.p()[1] * g[1] + c.delta() * self.u(x, t)
    }

    /// Total flux `A grad u + u p`.
    pub fn flux_vector(&self, x: Point, t: f64) -> [f64; 2] {
        let ag = self.coeffs.apply_a(self.grad_u(x, t));
        let (u, p) = (self.u(x, t), self.coeffs.p());
        [ag[0] + u * p[0], ag[1] + u * p[1]]
    }

    /// Neumann datum `(A grad u + u p) . nu`.
    pub fn flux(&self, x: Point, normal: [f64; 2], t: f64) -> f64 {
        let q = self.flux_vector(x, t);
        q[0] * normal[0] + q[1] * normal[1]
    }

    pub fn u_d(&self, x: Point, t: f64) -> f64 {
        self.u(x, t)
    }

    pub fn u0(&self, x: Point) -> f64 {
        self.u(x, 0.0)
    }

    /// Compares gradient, Hessian and time derivative with central
    /// differences at a fixed set of points in the unit square.
    pub fn check_consistency(&self) -> Result<()> {
        const H: f64 = 1e-5;
        const TOL: f64 = 1e-6;
        let samples = [[0.13, 0.71], [0.5, 0.5], [0.92, 0.08], [0.37, 0.29], [0.64, 0.88]];
        for (i, &x) in samples.iter().enumerate() {
            let t = 0.25 + 0.5 * i as f64 / samples.len() as f64;
            let shift = |d: usize, s: f64| {
                let mut y = x;
                y[d] += s;
                y
            };
            let g = self.grad_u(x, t);
            let hs = (self.exact.hessian)(x, t);
            for d in 0..2 {
                let fd = (self.u(shift(d, H), t) - self.u(shift(d, -H), t)) / (2.0 * H);
                let fd_h = [0, 1].map(|e| (self.grad_u(shift(d, H), t)[e] - self.grad_u(shift(d, -H), t)[e]) / (2.0 * H));
                let bad = (fd - g[d]).abs() > TOL || (0..2).any(|e| (fd_h[e] - hs[e][d]).abs() > TOL);
                if bad {
                    return Err(Error::InvalidArgument(format!(
                        "problem '{}': derivatives disagree with finite differences at {x:?}",
                        self.name
                    )));
                }
            }
            if self.transient {
                let fd = (self.u(x, t + H) - self.u(x, t - H)) / (2.0 * H);
                if (fd - (self.exact.time_derivative)(x, t)).abs() > TOL {
                    return Err(Error::InvalidArgument(format!(
                        "problem '{}': time derivative disagrees with finite differences",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elliptic_load_matches_closed_form() {
        let p = ManufacturedProblem::by_name("elliptic-poly").unwrap();
        for x in [[0.1, 0.2], [0.5, 0.5], [0.9, 0.3], [0.0, 0.7]] {
            let (a, b) = (x[0] - x[0] * x[0], x[1] - x[1] * x[1]);
            let f = 2.0 * b + 2.0 * a + (1.0 - 2.0 * x[0]) * b + a * (1.0 - 2.0 * x[1]) + a * b;
            assert!((p.f(x, 0.0) - f).abs() < 1e-15);
            let q = p.flux_vector(x, 0.0);
            assert!((q[0] - (1.0 - x[0] - x[0] * x[0]) * b).abs() < 1e-15);
            assert!((q[1] - a * (1.0 - x[1] - x[1] * x[1])).abs() < 1e-15);
        }
    }

    #[test]
    fn parabolic_load_matches_closed_form() {
        let p = ManufacturedProblem::by_name("parabolic-poly").unwrap();
        for (x, t) in [([0.1, 0.2], 0.3), ([0.5, 0.5], 1.0), ([0.9, 0.3], 0.0)] {
            let (a, b) = (x[0] - x[0] * x[0], x[1] - x[1] * x[1]);
            let f = a * b + 2.0 * t * b + 2.0 * t * a + t * (1.0 - 2.0 * x[0]) * b + t * a * (1.0 - 2.0 * x[1]) + t * a * b;
            assert!((p.f(x, t) - f).abs() < 1e-15);
        }
        assert_eq!(p.u0([0.3, 0.4]), 0.0);
    }

    #[test]
    fn flux_on_bottom_edge() {
        let p = ManufacturedProblem::by_name("elliptic-poly").unwrap();
        let x = [0.3, 0.0];
        assert!((p.flux(x, [0.0, -1.0], 0.0) + (0.3 - 0.09)).abs() < 1e-15);
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(ManufacturedProblem::by_name("nope"), Err(Error::UnknownProblem(_))));
    }

    #[test]
    fn inconsistent_derivatives_are_rejected() {
        let wrong = ExactSolution {
            gradient: |x, _| [x[0], 0.0],
            ..STATIONARY_BUBBLE
        };
        let c = ProblemCoefficients::laplace();
        assert!(ManufacturedProblem::new("wrong", wrong, c, false).is_err());
    }
}

//! Stationary saddle-point solve.
//!
//! ```text
//! [ B + D + M   -Cᵀ ] [ U ]   [ b + LN ]
//! [   -C         0  ] [ Λ ] = [   bD   ]
//! ```

use std::time::{Duration, Instant};

use crate::assembly::{
    assemble_dirichlet, assemble_load, assemble_neumann, assemble_operators, GlobalOperators, ProblemCoefficients,
};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::sparse::{inf_norm, solve_sparse, SparseMatrix, TripletBuffer};
use crate::topology::{EdgeClassification, EdgeTopology};

/// Primal coefficients (three per element) and one multiplier per retained edge.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteSolution {
    pub u: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl DiscreteSolution {
    pub fn zeros(n: usize, l: usize) -> Self {
        Self {
            u: vec![0.0; n],
            lambda: vec![0.0; l],
        }
    }

    /// Splits a stacked `[U; Λ]` vector.
    pub fn from_stacked(mut w: Vec<f64>, n: usize) -> Self {
        let lambda = w.split_off(n);
        Self { u: w, lambda }
    }

    pub fn stacked(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.u.len() + self.lambda.len());
        w.extend_from_slice(&self.u);
        w.extend_from_slice(&self.lambda);
        w
    }

    /// Nodal values of element `m`.
    pub fn element_values(&self, m: usize) -> [f64; 3] {
        [self.u[3 * m], self.u[3 * m + 1], self.u[3 * m + 2]]
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.lambda).all(|v| v.is_finite())
    }
}

/// Volume, Neumann and Dirichlet right-hand sides.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadVectors {
    pub b: Vec<f64>,
    pub ln: Vec<f64>,
    pub bd: Vec<f64>,
}

impl LoadVectors {
    pub fn assemble(
        mesh: &Mesh,
        topology: &EdgeTopology,
        classification: &EdgeClassification,
        f: impl Fn(Point) -> f64,
        flux: impl Fn(Point, [f64; 2]) -> f64,
        u_d: impl Fn(Point) -> f64,
    ) -> Result<Self> {
        Ok(Self {
            b: assemble_load(mesh, f)?,
            ln: assemble_neumann(mesh, topology, classification, flux)?,
            bd: assemble_dirichlet(mesh, topology, classification, u_d)?,
        })
    }
}

/// Builds `[[K, -s Cᵀ], [-t C, 0]]`.
pub fn saddle_matrix(k: &SparseMatrix, c: &SparseMatrix, s: f64, t: f64) -> SparseMatrix {
    let (n, l) = (k.nrows(), c.nrows());
    let mut buf = TripletBuffer::with_capacity(n + l, n + l, k.nnz() + 2 * c.nnz());
    buf.add_matrix(k, 0, 0, 1.0);
    buf.add_transposed(c, 0, n, -s);
    buf.add_matrix(c, n, 0, -t);
    buf.build().expect("blocks fit the saddle shape")
}

/// `‖C U + bD‖_∞`: how far the solution is from satisfying the constraints.
pub fn constraint_residual(c: &SparseMatrix, u: &[f64], bd: &[f64]) -> f64 {
    let cu = c.mul_vec(u);
    cu.iter().zip(bd).fold(0.0f64, |m, (a, b)| m.max((a + b).abs()))
}

/// Full output of a stationary solve, including intermediate data used by
/// error analysis and reporting.
#[derive(Clone, Debug)]
pub struct EllipticRun {
    pub solution: DiscreteSolution,
    pub operators: GlobalOperators,
    pub loads: LoadVectors,
    pub assembly_time: Duration,
    pub solve_time: Duration,
}

impl EllipticRun {
    pub fn constraint_residual(&self) -> f64 {
        constraint_residual(&self.operators.c, &self.solution.u, &self.loads.bd)
    }
}

pub fn solve_elliptic(
    mesh: &Mesh,
    topology: &EdgeTopology,
    classification: &EdgeClassification,
    coeffs: &ProblemCoefficients,
    f: impl Fn(Point) -> f64,
    flux: impl Fn(Point, [f64; 2]) -> f64,
    u_d: impl Fn(Point) -> f64,
) -> Result<DiscreteSolution> {
    solve_elliptic_detailed(mesh, topology, classification, coeffs, f, flux, u_d).map(|r| r.solution)
}

pub fn solve_elliptic_detailed(
    mesh: &Mesh,
    topology: &EdgeTopology,
    classification: &EdgeClassification,
    coeffs: &ProblemCoefficients,
    f: impl Fn(Point) -> f64,
    flux: impl Fn(Point, [f64; 2]) -> f64,
    u_d: impl Fn(Point) -> f64,
) -> Result<EllipticRun> {
    let start = Instant::now();
    let operators = assemble_operators(mesh, topology, classification, coeffs)?;
    let loads = LoadVectors::assemble(mesh, topology, classification, f, flux, u_d)?;
    let assembly_time = start.elapsed();

    let start = Instant::now();
    let n = operators.num_dofs();
    let system = saddle_matrix(&operators.primal_operator(), &operators.c, 1.0, 1.0);
    let mut rhs: Vec<f64> = loads.b.iter().zip(&loads.ln).map(|(b, g)| b + g).collect();
    rhs.extend_from_slice(&loads.bd);
    let w = solve_sparse(&system, &rhs)?;
    let solve_time = start.elapsed();

    let solution = DiscreteSolution::from_stacked(w, n);
    let scale = inf_norm(&loads.bd).max(1.0);
    let res = constraint_residual(&operators.c, &solution.u, &loads.bd);
    if res > 1e-9 * scale {
        return Err(Error::Solver(format!("constraint residual {res:e} exceeds tolerance")));
    }
    Ok(EllipticRun {
        solution,
        operators,
        loads,
        assembly_time,
        solve_time,
    })
}

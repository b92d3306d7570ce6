//! Crank–Nicolson time stepping.
//!
//! Each step solves `M+ W^n = M- W^(n-1) + F^(n-1/2)` with
//!
//! ```text
//! M± = [ (1 ± kδ/2) Mass ± k/2 B ± k/2 D   ∓ k/2 Cᵀ ]
//!      [           ∓ 1/2 C                    0    ]
//! F  = [ k (b + LN) ; bD ]  averaged over t_(n-1) and t_n
//! ```
//!
//! `M+` is factorized once per run.

use std::time::{Duration, Instant};

use crate::assembly::{
    assemble_dirichlet, assemble_load, assemble_neumann, assemble_operators, GlobalOperators, ProblemCoefficients,
};
use crate::elliptic::{constraint_residual, saddle_matrix, DiscreteSolution};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::sparse::{solve_refined, SparseLu, SparseMatrix};
use crate::topology::{EdgeClassification, EdgeTopology};

/// Where the time grid starts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TimeOrigin {
    /// `t_n = n k`; the initial state sits at `t = 0` and the run ends at `n_steps k`.
    #[default]
    Zero,
    /// `t_n = (n + 1) k`; the initial state sits at `t = k` and the run ends at
    /// `(n_steps + 1) k`. This is the indexing of the reference MATLAB driver
    /// whose tabulated errors the convergence study reproduces.
    FirstStep,
}

/// Equally spaced time levels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    k: f64,
    n_steps: usize,
    origin: TimeOrigin,
}

impl TimeGrid {
    /// Grid with `round(t_end / k)` steps. Fails unless that count times `k`
    /// reproduces `t_end` to a relative `1e-9`.
    pub fn new(t_end: f64, k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) || !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!("need k > 0 and t_end > 0, got k={k}, t_end={t_end}")));
        }
        let n = (t_end / k).round();
        if n < 1.0 || (n * k - t_end).abs() > 1e-9 * t_end {
            return Err(Error::InvalidArgument(format!("t_end={t_end} is not a multiple of k={k}")));
        }
        Self::with_steps(k, n as usize)
    }

    pub fn with_steps(k: f64, n_steps: usize) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) || n_steps == 0 {
            return Err(Error::InvalidArgument(format!("need k > 0 and at least one step, got k={k}, n={n_steps}")));
        }
        Ok(Self {
            k,
            n_steps,
            origin: TimeOrigin::Zero,
        })
    }

    pub fn with_origin(mut self, origin: TimeOrigin) -> Self {
        self.origin = origin;
        self
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn origin(&self) -> TimeOrigin {
        self.origin
    }

    /// Time of state `n`, `0 <= n <= n_steps`.
    pub fn time(&self, n: usize) -> f64 {
        match self.origin {
            TimeOrigin::Zero => n as f64 * self.k,
            TimeOrigin::FirstStep => (n + 1) as f64 * self.k,
        }
    }

    /// Time of the final state.
    pub fn t_end(&self) -> f64 {
        self.time(self.n_steps)
    }
}

/// Builds `(M+, M-)` for step size `k`.
pub fn step_matrices(
    operators: &GlobalOperators,
    coeffs: &ProblemCoefficients,
    k: f64,
) -> Result<(SparseMatrix, SparseMatrix)> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {k}")));
    }
    let half = 0.5 * k;
    let top = |s: f64| {
        SparseMatrix::linear_combination(&[
            (1.0 + s * half * coeffs.delta(), &operators.mass),
            (s * half, &operators.b),
            (s * half, &operators.d),
        ])
    };
    let plus = saddle_matrix(&top(1.0)?, &operators.c, half, 0.5);
    let minus = saddle_matrix(&top(-1.0)?, &operators.c, -half, -0.5);
    Ok((plus, minus))
}

/// Volume and Neumann loads at `t_n = n k`.
pub fn load_at_time(
    mesh: &Mesh,
    topology: &EdgeTopology,
    classification: &EdgeClassification,
    f: impl Fn(Point, f64) -> f64,
    flux: impl Fn(Point, [f64; 2], f64) -> f64,
    n: usize,
    k: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = n as f64 * k;
    Ok((
        assemble_load(mesh, |x| f(x, t))?,
        assemble_neumann(mesh, topology, classification, |x, nu| flux(x, nu, t))?,
    ))
}

/// Time-dependent data of a transient problem.
pub struct TransientData<'a> {
    pub load: &'a dyn Fn(Point, f64) -> f64,
    pub flux: &'a dyn Fn(Point, [f64; 2], f64) -> f64,
    pub dirichlet: &'a dyn Fn(Point, f64) -> f64,
    pub initial: &'a dyn Fn(Point) -> f64,
}

#[derive(Clone, Debug, Default)]
pub struct ParabolicOptions {
    /// Initial primal values, three per element; when absent the initial
    /// function is interpolated at the vertices.
    pub initial_values: Option<Vec<f64>>,
    /// Initial multipliers; zero when absent.
    pub initial_multiplier: Option<Vec<f64>>,
    /// Keep every state, not only the last one.
    pub store_trajectory: bool,
}

#[derive(Clone, Debug)]
pub struct ParabolicRun {
    /// State at `grid.t_end()`.
    pub solution: DiscreteSolution,
    pub t_end: f64,
    pub steps: usize,
    pub operators: GlobalOperators,
    /// Largest `‖C U^(n-1/2) + bD^(n-1/2)‖_∞` over all steps.
    pub max_constraint_residual: f64,
    /// `(t_n, W^n)` for `n = 0..=steps` when requested.
    pub trajectory: Option<Vec<(f64, DiscreteSolution)>>,
    pub assembly_time: Duration,
    /// Factorization plus all time steps.
    pub solve_time: Duration,
}

impl ParabolicRun {
    pub fn mean_step_time(&self) -> Duration {
        self.solve_time / self.steps.max(1) as u32
    }
}

pub fn solve_parabolic(
    mesh: &Mesh,
    topology: &EdgeTopology,
    classification: &EdgeClassification,
    coeffs: &ProblemCoefficients,
    data: &TransientData<'_>,
    grid: TimeGrid,
    options: &ParabolicOptions,
) -> Result<ParabolicRun> {
    let start = Instant::now();
    let operators = assemble_operators(mesh, topology, classification, coeffs)?;
    let (n, l) = (operators.num_dofs(), operators.num_multipliers());
    let (plus, minus) = step_matrices(&operators, coeffs, grid.k())?;
    let assembly_time = start.elapsed();

    let start = Instant::now();
    let lu = SparseLu::factorize(&plus)?;

    let u0 = match &options.initial_values {
        Some(u0) if u0.len() != n => {
            return Err(Error::DimensionMismatch(format!("initial values have length {}, expected {n}", u0.len())))
        }
        Some(u0) => u0.clone(),
        None => (0..mesh.num_elements())
            .flat_map(|m| mesh.vertices(m).map(|x| (data.initial)(x)))
            .collect(),
    };
    let lambda0 = match &options.initial_multiplier {
        Some(l0) if l0.len() != l => {
            return Err(Error::DimensionMismatch(format!("initial multiplier has length {}, expected {l}", l0.len())))
        }
        Some(l0) => l0.clone(),
        None => vec![0.0; l],
    };
    let mut state = DiscreteSolution { u: u0, lambda: lambda0 };
    if !state.is_finite() {
        return Err(Error::BlowUp(0));
    }
    let mut trajectory = options.store_trajectory.then(|| vec![(grid.time(0), state.clone())]);

    let data_at = |t: f64| -> Result<(Vec<f64>, Vec<f64>)> {
        let b = assemble_load(mesh, |x| (data.load)(x, t))?;
        let ln = assemble_neumann(mesh, topology, classification, |x, nu| (data.flux)(x, nu, t))?;
        let bd = assemble_dirichlet(mesh, topology, classification, |x| (data.dirichlet)(x, t))?;
        let primal = b.iter().zip(&ln).map(|(b, g)| grid.k() * (b + g)).collect();
        Ok((primal, bd))
    };

    let mut max_res = 0.0f64;
    let mut prev = data_at(grid.time(0))?;
    for step in 1..=grid.n_steps() {
        let next = data_at(grid.time(step))?;
        let mut rhs = minus.mul_vec(&state.stacked());
        let fp = prev.0.iter().zip(&next.0).map(|(a, b)| 0.5 * (a + b));
        let fd = prev.1.iter().zip(&next.1).map(|(a, b)| 0.5 * (a + b));
        let bd_mid: Vec<f64> = fd.collect();
        for (r, f) in rhs.iter_mut().zip(fp.chain(bd_mid.iter().copied())) {
            *r += f;
        }
        let w = match solve_refined(&plus, &lu, &rhs) {
            Ok(w) => w,
            Err(Error::Singular(_)) if rhs.iter().all(|v| v.is_finite()) => return Err(Error::BlowUp(step)),
            Err(e) => return Err(e),
        };
        let next_state = DiscreteSolution::from_stacked(w, n);
        if !next_state.is_finite() {
            return Err(Error::BlowUp(step));
        }
        let u_mid: Vec<f64> = state.u.iter().zip(&next_state.u).map(|(a, b)| 0.5 * (a + b)).collect();
        max_res = max_res.max(constraint_residual(&operators.c, &u_mid, &bd_mid));
        state = next_state;
        prev = next;
        if let Some(tr) = trajectory.as_mut() {
            tr.push((grid.time(step), state.clone()));
        }
    }
    let solve_time = start.elapsed();

    Ok(ParabolicRun {
        solution: state,
        t_end: grid.t_end(),
        steps: grid.n_steps(),
        operators,
        max_constraint_residual: max_res,
        trajectory,
        assembly_time,
        solve_time,
    })
}

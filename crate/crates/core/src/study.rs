//! Convergence studies over uniformly refined meshes.
//!
//! Level `n` is the base mesh refined `n` times.

use std::fmt::Write;
use std::ops::RangeInclusive;
use std::time::Duration;

use crate::analysis::{convergence_orders, error_h1, error_l2, error_multiplier, exact_multiplier, ManufacturedProblem};
use crate::elliptic::{solve_elliptic_detailed, DiscreteSolution};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::parabolic::{solve_parabolic, ParabolicOptions, TimeGrid, TimeOrigin, TransientData};
use crate::refine::red_refine;
use crate::topology::Discretization;

#[derive(Clone, Debug)]
pub struct StudyOptions {
    pub levels: RangeInclusive<usize>,
    /// Time step; `None` couples it to the mesh size (`k = h`).
    pub k: Option<f64>,
    /// Number of time steps is `t_end / k`.
    pub t_end: f64,
    pub time_origin: TimeOrigin,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            levels: 1..=5,
            k: None,
            t_end: 1.0,
            time_origin: TimeOrigin::FirstStep,
        }
    }
}

/// Errors and timings of one level.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelResult {
    pub level: usize,
    pub n_elements: usize,
    pub h: f64,
    /// Time step and final time, for transient problems.
    pub k: Option<f64>,
    pub t_end: Option<f64>,
    pub steps: Option<usize>,
    pub h1: f64,
    pub l2: f64,
    pub m: f64,
    /// Largest constraint residual `‖C U + bD‖_∞` over all solves.
    pub constraint_residual: f64,
    pub assembly_time: Duration,
    pub solve_time: Duration,
}

#[derive(Clone, Debug)]
pub struct StudyReport {
    pub problem: String,
    pub transient: bool,
    pub levels: Vec<LevelResult>,
}

/// Per-transition orders `[H1, L2, M]`.
pub type Orders = [f64; 3];

impl StudyReport {
    pub fn orders(&self) -> Result<Vec<Orders>> {
        if self.levels.len() < 2 {
            return Ok(Vec::new());
        }
        let hs: Vec<f64> = self.levels.iter().map(|l| l.h).collect();
        let col = |f: fn(&LevelResult) -> f64| -> Result<Vec<f64>> {
            convergence_orders(&self.levels.iter().map(f).collect::<Vec<_>>(), &hs)
        };
        let (h1, l2, m) = (col(|l| l.h1)?, col(|l| l.l2)?, col(|l| l.m)?);
        Ok((0..h1.len()).map(|j| [h1[j], l2[j], m[j]]).collect())
    }

    /// Per-level CSV. Order columns are empty on the first row. With
    /// `timings = false` the output depends only on the inputs.
    pub fn to_csv(&self, timings: bool) -> String {
        let orders = self.orders().unwrap_or_default();
        let mut s = String::from("level,nE,h");
        if self.transient {
            s.push_str(",k,t_end,steps");
        }
        s.push_str(",h1_error,l2_error,m_error,h1_order,l2_order,m_order,constraint_residual");
        if timings {
            s.push_str(",assembly_s,solve_s");
            if self.transient {
                s.push_str(",step_s");
            }
        }
        s.push('\n');
        for (i, l) in self.levels.iter().enumerate() {
            write!(s, "{},{},{:e}", l.level, l.n_elements, l.h).unwrap();
            if self.transient {
                write!(
                    s,
                    ",{:e},{:e},{}",
                    l.k.unwrap_or(f64::NAN),
                    l.t_end.unwrap_or(f64::NAN),
                    l.steps.unwrap_or(0)
                )
                .unwrap();
            }
            write!(s, ",{:e},{:e},{:e}", l.h1, l.l2, l.m).unwrap();
            match i.checked_sub(1).and_then(|j| orders.get(j)) {
                Some(o) => write!(s, ",{:.6},{:.6},{:.6}", o[0], o[1], o[2]).unwrap(),
                None => s.push_str(",,,"),
            }
            write!(s, ",{:e}", l.constraint_residual).unwrap();
            if timings {
                write!(s, ",{:.6},{:.6}", l.assembly_time.as_secs_f64(), l.solve_time.as_secs_f64()).unwrap();
                if self.transient {
                    let per = l.solve_time.as_secs_f64() / l.steps.unwrap_or(1).max(1) as f64;
                    write!(s, ",{per:.6}").unwrap();
                }
            }
            s.push('\n');
        }
        s
    }

    /// Fixed-width table of errors and orders per level.
    pub fn summary(&self) -> String {
        let orders = self.orders().unwrap_or_default();
        let mut s = String::new();
        writeln!(s, "problem: {}", self.problem).unwrap();
        writeln!(
            s,
            "{:>5} {:>8} {:>10} {:>12} {:>12} {:>12} {:>8} {:>8} {:>8}",
            "level", "nE", "h", "H1", "L2", "M", "ord H1", "ord L2", "ord M"
        )
        .unwrap();
        for (i, l) in self.levels.iter().enumerate() {
            write!(
                s,
                "{:>5} {:>8} {:>10.6} {:>12.4e} {:>12.4e} {:>12.4e}",
                l.level, l.n_elements, l.h, l.h1, l.l2, l.m
            )
            .unwrap();
            if let Some(o) = i.checked_sub(1).and_then(|j| orders.get(j)) {
                write!(s, " {:>8.4} {:>8.4} {:>8.4}", o[0], o[1], o[2]).unwrap();
            }
            s.push('\n');
        }
        s
    }
}

/// Errors of a discrete solution against the problem's exact solution at time `t`.
pub fn solution_errors(
    disc: &Discretization,
    problem: &ManufacturedProblem,
    solution: &DiscreteSolution,
    c: &crate::sparse::SparseMatrix,
    b: &crate::sparse::SparseMatrix,
    t: f64,
) -> Result<(f64, f64, f64)> {
    let h1 = error_h1(&disc.mesh, &solution.u, |x| problem.grad_u(x, t))?;
    let l2 = error_l2(&disc.mesh, &solution.u, |x| problem.u(x, t))?;
    let kappa = exact_multiplier(
        &disc.mesh,
        &disc.topology,
        &disc.classification,
        problem.coeffs(),
        |x| problem.u(x, t),
        |x| problem.grad_u(x, t),
    );
    let m = error_multiplier(&kappa, &solution.lambda, c, b)?;
    Ok((h1, l2, m))
}

/// Solves `problem` on one discretization.
pub fn run_level(
    disc: &Discretization,
    level: usize,
    problem: &ManufacturedProblem,
    options: &StudyOptions,
) -> Result<LevelResult> {
    solve_level(disc, level, problem, options).map(|(r, _)| r)
}

/// Like [`run_level`], also returning the final discrete solution.
pub fn solve_level(
    disc: &Discretization,
    level: usize,
    problem: &ManufacturedProblem,
    options: &StudyOptions,
) -> Result<(LevelResult, DiscreteSolution)> {
    let Discretization {
        mesh,
        topology,
        classification,
    } = disc;
    let h = mesh.mesh_size()?;
    let coeffs = problem.coeffs();
    if !problem.is_transient() {
        let run = solve_elliptic_detailed(
            mesh,
            topology,
            classification,
            coeffs,
            |x| problem.f(x, 0.0),
            |x, nu| problem.flux(x, nu, 0.0),
            |x| problem.u_d(x, 0.0),
        )?;
        let (h1, l2, m) = solution_errors(disc, problem, &run.solution, &run.operators.c, &run.operators.b, 0.0)?;
        let result = LevelResult {
            level,
            n_elements: mesh.num_elements(),
            h,
            k: None,
            t_end: None,
            steps: None,
            h1,
            l2,
            m,
            constraint_residual: run.constraint_residual(),
            assembly_time: run.assembly_time,
            solve_time: run.solve_time,
        };
        return Ok((result, run.solution));
    }

    let k = options.k.unwrap_or(h);
    let grid = TimeGrid::new(options.t_end, k)?.with_origin(options.time_origin);
    let load = |x, t| problem.f(x, t);
    let flux = |x, nu, t| problem.flux(x, nu, t);
    let dirichlet = |x, t| problem.u_d(x, t);
    let initial = |x| problem.u0(x);
    let data = TransientData {
        load: &load,
        flux: &flux,
        dirichlet: &dirichlet,
        initial: &initial,
    };
    let lambda0 = exact_multiplier(
        mesh,
        topology,
        classification,
        coeffs,
        |x| problem.u(x, 0.0),
        |x| problem.grad_u(x, 0.0),
    );
    let opts = ParabolicOptions {
        initial_multiplier: Some(lambda0),
        ..Default::default()
    };
    let run = solve_parabolic(mesh, topology, classification, coeffs, &data, grid, &opts)?;
    let (h1, l2, m) = solution_errors(disc, problem, &run.solution, &run.operators.c, &run.operators.b, run.t_end)?;
    let result = LevelResult {
        level,
        n_elements: mesh.num_elements(),
        h,
        k: Some(k),
        t_end: Some(run.t_end),
        steps: Some(run.steps),
        h1,
        l2,
        m,
        constraint_residual: run.max_constraint_residual,
        assembly_time: run.assembly_time,
        solve_time: run.solve_time,
    };
    Ok((result, run.solution))
}

/// Runs `problem` on every level of `options.levels`.
pub fn run_convergence_study(
    base: &Mesh,
    problem: &ManufacturedProblem,
    options: &StudyOptions,
) -> Result<StudyReport> {
    if options.levels.is_empty() {
        return Err(Error::InvalidArgument("level range is empty".into()));
    }
    let mut disc = Discretization::new(base.clone())?;
    let mut levels = Vec::new();
    for level in 0..=*options.levels.end() {
        if level > 0 {
            disc = Discretization::new(red_refine(&disc.mesh, &disc.topology))?;
        }
        if options.levels.contains(&level) {
            levels.push(run_level(&disc, level, problem, options)?);
        }
    }
    Ok(StudyReport {
        problem: problem.name().to_string(),
        transient: problem.is_transient(),
        levels,
    })
}

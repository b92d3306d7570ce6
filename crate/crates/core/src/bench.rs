//! Timing of refinement, topology and assembly per refinement level, with
//! a log-log regression of time against element count.

use std::fmt::Write;
use std::ops::RangeInclusive;
use std::time::{Duration, Instant};

use crate::assembly::{assemble_constraints, assemble_element_operators, ProblemCoefficients};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::refine::red_refine;
use crate::topology::{build_topology, classify_edges};

/// Levels below this are timed as the median of three runs.
pub const REPEAT_BELOW_LEVEL: usize = 7;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchLevel {
    pub level: usize,
    pub n_elements: usize,
    pub n_edges: usize,
    /// Refinement from the previous level; zero for level 0.
    pub refine: Duration,
    pub topology: Duration,
    pub operators: Duration,
    pub constraints: Duration,
}

impl BenchLevel {
    /// Topology plus operator and constraint assembly.
    pub fn assembly_total(&self) -> Duration {
        self.topology + self.operators + self.constraints
    }
}

/// Least-squares fit of `log y = slope log x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// `None` with fewer than two points or no spread in `x`.
pub fn log_log_regression(x: &[f64], y: &[f64]) -> Option<Regression> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(Regression {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub levels: Vec<BenchLevel>,
    /// Fit of [`BenchLevel::assembly_total`] against element count.
    pub regression: Option<Regression>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,nE,nEdges,refine_s,topology_s,operators_s,constraints_s,assembly_total_s\n");
        for l in &self.levels {
            writeln!(
                s,
                "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
                l.level,
                l.n_elements,
                l.n_edges,
                l.refine.as_secs_f64(),
                l.topology.as_secs_f64(),
                l.operators.as_secs_f64(),
                l.constraints.as_secs_f64(),
                l.assembly_total().as_secs_f64()
            )
            .unwrap();
        }
        s
    }

    pub fn regression_line(&self) -> String {
        match self.regression {
            Some(r) => format!("log-log slope {:.4}, R^2 {:.4}", r.slope, r.r_squared),
            None => "log-log slope undefined (need at least two levels)".to_string(),
        }
    }
}

fn timed<T>(reps: usize, mut f: impl FnMut() -> Result<T>) -> Result<(T, Duration)> {
    let mut times = Vec::with_capacity(reps);
    let mut out = None;
    for _ in 0..reps {
        let start = Instant::now();
        let v = f()?;
        times.push(start.elapsed());
        out = Some(v);
    }
    times.sort();
    Ok((out.expect("at least one repetition"), times[times.len() / 2]))
}

pub fn run_benchmark(base: &Mesh, levels: RangeInclusive<usize>, coeffs: &ProblemCoefficients) -> Result<BenchReport> {
    if levels.is_empty() {
        return Err(Error::InvalidArgument("level range is empty".into()));
    }
    let mut mesh = base.clone();
    let mut topology = build_topology(&mesh)?;
    let mut out = Vec::new();
    for level in 0..=*levels.end() {
        let reps = if level < REPEAT_BELOW_LEVEL { 3 } else { 1 };
        let mut refine = Duration::ZERO;
        if level > 0 {
            let (m, t) = timed(reps, || Ok(red_refine(&mesh, &topology)))?;
            mesh = m;
            refine = t;
        }
        let (topo, topo_time) = timed(reps, || build_topology(&mesh))?;
        topology = topo;
        if !levels.contains(&level) {
            continue;
        }
        let classification = classify_edges(&topology, &mesh)?;
        let (_, operators) = timed(reps, || assemble_element_operators(&mesh, coeffs))?;
        let (_, constraints) = timed(reps, || assemble_constraints(&mesh, &topology, &classification))?;
        out.push(BenchLevel {
            level,
            n_elements: mesh.num_elements(),
            n_edges: topology.num_edges(),
            refine,
            topology: topo_time,
            operators,
            constraints,
        });
    }
    let x: Vec<f64> = out.iter().map(|l| l.n_elements as f64).collect();
    let y: Vec<f64> = out.iter().map(|l| l.assembly_total().as_secs_f64()).collect();
    Ok(BenchReport {
        regression: log_log_regression(&x, &y),
        levels: out,
    })
}

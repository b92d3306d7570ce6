//! Settings from the optional TOML file merged with command-line flags.

use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Deserialize;

use phfem::assembly::ProblemCoefficients;
use phfem::parabolic::TimeOrigin;
use phfem::study::StudyOptions;

use crate::{CliError, CliResult, CommonArgs};

const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    /// Initial state at t = 0, errors at exactly t_end.
    Zero,
    /// Initial state at t = k, errors at t_end + k.
    FirstStep,
}

impl From<Origin> for TimeOrigin {
    fn from(o: Origin) -> Self {
        match o {
            Origin::Zero => TimeOrigin::Zero,
            Origin::FirstStep => TimeOrigin::FirstStep,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum LevelSpec {
    Single(usize),
    Text(String),
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoefficientConfig {
    a: Option<[[f64; 2]; 2]>,
    p: Option<[f64; 2]>,
    delta: Option<f64>,
}

/// Contents of a `--config` file. Relative paths are taken relative to the
/// file's directory.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    mesh: Option<PathBuf>,
    problem: Option<String>,
    levels: Option<LevelSpec>,
    k: Option<f64>,
    t_end: Option<f64>,
    time_origin: Option<Origin>,
    out: Option<PathBuf>,
    export_solution: Option<PathBuf>,
    tolerance: Option<f64>,
    coefficients: Option<CoefficientConfig>,
}

impl FileConfig {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: Self =
            toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.mesh, &mut cfg.out, &mut cfg.export_solution].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Parses `n` or the inclusive range `a..b`.
pub fn parse_levels(s: &str) -> CliResult<RangeInclusive<usize>> {
    let bad = || CliError::config(format!("invalid level range '{s}', expected 'n' or 'a..b'"));
    let s = s.trim();
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a.trim(), b.trim().trim_start_matches('=')),
        None => (s, s),
    };
    let a: usize = a.parse().map_err(|_| bad())?;
    let b: usize = b.parse().map_err(|_| bad())?;
    if a > b {
        return Err(CliError::config(format!("level range '{s}' is empty")));
    }
    Ok(a..=b)
}

#[derive(Clone, Debug, Default)]
pub struct Settings {
    pub mesh: Option<PathBuf>,
    pub problem: Option<String>,
    levels: Option<String>,
    k: Option<f64>,
    t_end: Option<f64>,
    time_origin: Option<Origin>,
    pub out: Option<PathBuf>,
    pub export_solution: Option<PathBuf>,
    a: Option<[[f64; 2]; 2]>,
    p: Option<[f64; 2]>,
    delta: Option<f64>,
    tolerance: Option<f64>,
}

fn positive(name: &str, v: Option<f64>) -> CliResult<Option<f64>> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(CliError::config(format!("{name} must be positive, got {x}"))),
        v => Ok(v),
    }
}

impl Settings {
    /// Flags win over the file.
    pub fn merge(args: &CommonArgs, file: FileConfig) -> CliResult<Self> {
        let coeffs = file.coefficients.unwrap_or_default();
        let levels = args.levels.clone().or(file.levels.map(|l| match l {
            LevelSpec::Single(n) => n.to_string(),
            LevelSpec::Text(s) => s,
        }));
        let a = match args.a.as_deref() {
            Some(&[a11, a12, a21, a22]) => Some([[a11, a12], [a21, a22]]),
            Some(_) => return Err(CliError::config("--a takes four comma-separated values")),
            None => coeffs.a,
        };
        let p = match args.p.as_deref() {
            Some(&[p1, p2]) => Some([p1, p2]),
            Some(_) => return Err(CliError::config("--p takes two comma-separated values")),
            None => coeffs.p,
        };
        let settings = Self {
            mesh: args.mesh.clone().or(file.mesh),
            problem: args.problem.clone().or(file.problem),
            levels,
            k: positive("k", args.k.or(file.k))?,
            t_end: positive("t_end", args.t_end.or(file.t_end))?,
            time_origin: args.time_origin.or(file.time_origin),
            out: args.out.clone().or(file.out),
            export_solution: args.export_solution.clone().or(file.export_solution),
            a,
            p,
            delta: args.delta.or(coeffs.delta),
            tolerance: positive("tolerance", args.tolerance.or(file.tolerance))?,
        };
        if let Some(l) = &settings.levels {
            parse_levels(l)?;
        }
        Ok(settings)
    }

    pub fn levels(&self, default: RangeInclusive<usize>) -> CliResult<RangeInclusive<usize>> {
        match &self.levels {
            Some(s) => parse_levels(s),
            None => Ok(default),
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(DEFAULT_TOLERANCE)
    }

    /// Coefficients with overrides applied to `base`; `None` without overrides.
    pub fn coefficients(&self, base: &ProblemCoefficients) -> CliResult<Option<ProblemCoefficients>> {
        if self.a.is_none() && self.p.is_none() && self.delta.is_none() {
            return Ok(None);
        }
        ProblemCoefficients::new(
            self.a.unwrap_or(base.a()),
            self.p.unwrap_or(base.p()),
            self.delta.unwrap_or(base.delta()),
        )
        .map(Some)
        .map_err(|e| CliError::config(e.to_string()))
    }

    pub fn study_options(&self, default_levels: RangeInclusive<usize>) -> CliResult<StudyOptions> {
        let defaults = StudyOptions::default();
        Ok(StudyOptions {
            levels: self.levels(default_levels)?,
            k: self.k,
            t_end: self.t_end.unwrap_or(defaults.t_end),
            time_origin: self.time_origin.map_or(defaults.time_origin, Into::into),
        })
    }
}

//! Problem files: a TOML document with `[problem]`, `[discretization]`,
//! `[solver]` and `[output]` sections.
//!
//! ```toml
//! [problem]
//! k = 2
//! n = 0
//! m = 1
//! l = "0"
//! g = "-t"
//! f = "2 - t/2"
//! y0 = [0.0, 0.0]
//!
//! [discretization]   # optional, defaults r = 3, q = 4
//! r = 3
//! q = 4
//!
//! [solver]           # optional
//! tol = 1e-12
//! max_iter = 100
//! initial_guess = "ic-taylor"   # or "ic-constant", "zero", or an explicit array
//!
//! [output]           # optional
//! grid_points = 1000
//! exact = "t^2"
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::basis::BasisConfig;
use crate::expr::Expr;
use crate::system::{InitialGuess, ProblemSpec, SolveOptions};
use crate::{Error, Result};

/// Largest accepted `r·q`.
pub const MAX_DIMENSION: usize = 4096;

pub const BUILTIN_NAMES: [&str; 3] = ["ex1", "ex2", "ex3"];

const EX1: &str = include_str!("../problems/ex1.toml");
const EX2: &str = include_str!("../problems/ex2.toml");
const EX3: &str = include_str!("../problems/ex3.toml");

/// Source text of a built-in problem.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    match name {
        "ex1" => Some(EX1),
        "ex2" => Some(EX2),
        "ex3" => Some(EX3),
        _ => None,
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    problem: RawProblem,
    #[serde(default)]
    discretization: RawDiscretization,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    k: usize,
    n: usize,
    m: usize,
    #[serde(default = "zero_expr")]
    l: String,
    #[serde(default = "zero_expr")]
    g: String,
    f: String,
    y0: Vec<f64>,
}

fn zero_expr() -> String {
    "0".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawDiscretization {
    r: usize,
    q: usize,
}

impl Default for RawDiscretization {
    fn default() -> Self {
        Self { r: 3, q: 4 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawGuess {
    Named(String),
    Custom(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawSolver {
    tol: f64,
    max_iter: usize,
    initial_guess: RawGuess,
}

impl Default for RawSolver {
    fn default() -> Self {
        let d = SolveOptions::default();
        Self {
            tol: d.tol,
            max_iter: d.max_iter,
            initial_guess: RawGuess::Named("ic-taylor".into()),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawOutput {
    grid_points: usize,
    exact: Option<String>,
}

impl Default for RawOutput {
    fn default() -> Self {
        Self {
            grid_points: 1000,
            exact: None,
        }
    }
}

/// A validated problem file.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub problem: ProblemSpec,
    pub cfg: BasisConfig,
    pub solver: SolveOptions,
    pub grid_points: usize,
    pub exact: Option<Expr>,
}

fn parse_expr(field: &str, src: &str) -> Result<Expr> {
    Expr::parse(src).map_err(|e| Error::InvalidProblem(format!("in `{field}`: {e}")))
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawFile = toml::from_str(text)?;
        let p = raw.problem;
        let problem = ProblemSpec::new(
            p.k,
            p.n,
            p.m,
            parse_expr("l", &p.l)?,
            parse_expr("g", &p.g)?,
            parse_expr("f", &p.f)?,
            p.y0,
        )?;

        let cfg = BasisConfig::new(raw.discretization.r, raw.discretization.q)?;
        if cfg.dim() > MAX_DIMENSION {
            return Err(Error::InvalidProblem(format!(
                "r·q = {} exceeds the limit of {MAX_DIMENSION}",
                cfg.dim()
            )));
        }

        let initial_guess = match raw.solver.initial_guess {
            RawGuess::Named(name) => match name.as_str() {
                "zero" => InitialGuess::Zero,
                "ic-constant" => InitialGuess::IcConstant,
                "ic-taylor" => InitialGuess::IcTaylor,
                other => {
                    return Err(Error::InvalidProblem(format!(
                        "unknown initial_guess {other:?} (expected \"zero\", \"ic-constant\", \"ic-taylor\" or an array)"
                    )))
                }
            },
            RawGuess::Custom(v) => {
                if v.len() != cfg.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: cfg.dim(),
                        got: v.len(),
                    });
                }
                InitialGuess::Custom(v)
            }
        };
        if raw.solver.tol.is_nan() || raw.solver.tol <= 0.0 || raw.solver.max_iter == 0 {
            return Err(Error::InvalidProblem(
                "solver needs tol > 0 and max_iter >= 1".into(),
            ));
        }
        if raw.output.grid_points < 2 {
            return Err(Error::InvalidProblem(
                "grid_points must be at least 2".into(),
            ));
        }
        let exact = raw
            .output
            .exact
            .as_deref()
            .map(|src| parse_expr("exact", src))
            .transpose()?;
        if exact.as_ref().is_some_and(Expr::uses_s) {
            return Err(Error::InvalidProblem(
                "exact solution must not reference s".into(),
            ));
        }

        Ok(Self {
            problem,
            cfg,
            solver: SolveOptions {
                tol: raw.solver.tol,
                max_iter: raw.solver.max_iter,
                initial_guess,
            },
            grid_points: raw.output.grid_points,
            exact,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn builtin(name: &str) -> Option<Result<Self>> {
        builtin_source(name).map(Self::parse)
    }
}
